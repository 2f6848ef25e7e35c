"""Shared builders for the test suite."""

import numpy as np
import pytest

from voxdosim.materials import DispersiveModel, Material, default_material_table
from voxdosim.phantom import VoxelPhantom


def air_phantom(nx=4, ny=4, nz=4, resolution=0.001):
    """All-free-space phantom: lets a domain be built around empty space."""
    return VoxelPhantom(np.zeros((nx, ny, nz), dtype=np.uint8), resolution,
                        default_material_table())


def block_phantom(dims, material, resolution=0.001, fill_id=1):
    """Homogeneous block of one custom material embedded in free space."""
    mats = [default_material_table()[0], material]
    vox = np.full(dims, fill_id, dtype=np.uint8)
    return VoxelPhantom(vox, resolution, mats)


def lossy_dielectric(name="lossy", eps_r=40.0, sigma=0.5, density=1000.0,
                     **thermal):
    return Material(name, DispersiveModel(eps_inf=eps_r, sigma_s=sigma),
                    density=density, **thermal)


@pytest.fixture(scope="session")
def default_table():
    return default_material_table()
