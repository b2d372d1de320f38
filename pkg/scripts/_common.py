"""Shared construction of the worked example: P = [0, 2], f = max(0, x - 1), K = 1."""

from toric_geodesic.config import ExperimentConfig


def example():
    conf = ExperimentConfig.example()
    cfg = conf.build_configuration()
    return cfg, conf.build_ray(cfg)
