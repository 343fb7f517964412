"""Photoacoustic beamforming package entrypoint."""

from pabeam.beamformers import Method, das, dmas, mv, mv_weights, mvb_dmas
from pabeam.imaging import envelope, lateral_profile, log_compress, reconstruct
from pabeam.main import main
from pabeam.simulator import simulate

__all__ = [
    "Method",
    "das",
    "dmas",
    "envelope",
    "lateral_profile",
    "log_compress",
    "main",
    "mv",
    "mv_weights",
    "mvb_dmas",
    "reconstruct",
    "simulate",
]
