"""Shared mesh/operator builds, cached per configuration for the whole session."""

from functools import lru_cache
from types import SimpleNamespace

import numpy as np
import pytest

import layerrom as lr

SOURCES = {
    "x2": lambda x1, x2: x2,
    "sin_pi_x2": lambda x1, x2: np.sin(np.pi * x2),
    "zero": lambda x1, x2: np.zeros_like(x1),
    "one": lambda x1, x2: np.ones_like(x1),
}


@lru_cache(maxsize=None)
def _problem(geometry: str, n_layers: int, h_denom: int):
    profile = getattr(lr.LayerProfile, geometry)()
    template = lr.build_template_layer(profile, 1.0 / h_denom)
    mesh = lr.reflect_and_tile(template, n_layers)
    part = lr.classify_dofs(mesh)
    K = lr.assemble_layer_stiffness(mesh, part)
    return SimpleNamespace(mesh=mesh, part=part, K=K, template=template,
                           geometry=geometry, n_layers=n_layers, h=1.0 / h_denom,
                           _deco=None, _svds=None, _loads={})


def problem(geometry: str, n_layers: int, h_denom: int):
    return _problem(geometry, n_layers, h_denom)


def deco_of(p):
    if p._deco is None:
        p._deco = lr.Decomposition(p.mesh, p.part, p.K)
    return p._deco


def svds_of(p):
    if p._svds is None:
        p._svds = lr.interface_svds(deco_of(p))
    return p._svds


def load_of(p, name: str):
    if name not in p._loads:
        p._loads[name] = lr.assemble_load(p.mesh, p.part, SOURCES[name], source=name)
    return p._loads[name]


@pytest.fixture(scope="session")
def square2_h16():
    return problem("square", 2, 16)


@pytest.fixture(scope="session")
def square2_h64():
    return problem("square", 2, 64)


@pytest.fixture(scope="session")
def square3_h32():
    return problem("square", 3, 32)


@pytest.fixture(scope="session")
def square3_h64():
    return problem("square", 3, 64)


@pytest.fixture(scope="session")
def crown3_h16():
    # refines internally to spacing 1/32 to honor the diameter bound
    return problem("crown", 3, 16)
