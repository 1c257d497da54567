"""
Center engine: spectral center conditions, accumulated fixed points,
periodic analytic disks and period verification.
"""

from .CE_disk import build_disk, disk_point, transverse_determinant
from .CE_models import CenterConfig, DiskModel, PeriodicityReport, SpectralReport, Verdict
from .CE_periodicity import min_period_scan, verify_disk
from .CE_probe import accumulation_probe
from .CE_spectrum import adapt_coordinates, analyze_spectrum

__all__ = [
    "CenterConfig",
    "DiskModel",
    "PeriodicityReport",
    "SpectralReport",
    "Verdict",
    "accumulation_probe",
    "adapt_coordinates",
    "analyze_spectrum",
    "build_disk",
    "disk_point",
    "min_period_scan",
    "transverse_determinant",
    "verify_disk",
]
