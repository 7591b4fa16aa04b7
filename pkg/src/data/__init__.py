"""
Data I/O: NetPBM rasters and phantom dataset directories.

Depends on margin_core.contracts for raster types; no dependency from margin_core back to data.
"""

from data.dataset_store import DatasetStore, StoredDataset
from data.netpbm import read_gray, read_mask, write_gray, write_mask, write_rgb

__all__ = [
    "DatasetStore",
    "read_gray",
    "read_mask",
    "StoredDataset",
    "write_gray",
    "write_mask",
    "write_rgb",
]
