"""Dispersive material model vs an independent scalar oracle."""

import math

import numpy as np
import pytest

from voxdosim.materials import (DispersiveModel, Material, MaterialTableError,
                                default_material_table, effective_conductivity,
                                evaluate_permittivity, load_material_table,
                                parse_material_table, save_material_table)

from oracles import (REFERENCE_PERMITTIVITY, scalar_conductivity,
                     scalar_permittivity)


def test_frozen_reference_values():
    # literals frozen from 50-digit arithmetic. Debye rows follow a pure
    # product/divide path (ulp-level); broadened rows go through complex
    # exponentiation, whose libm spread is ~1e-12.
    for (f, ei, de, tau, al, ss, er, eim, sig) in REFERENCE_PERMITTIVITY:
        model = DispersiveModel(ei, de, tau, al, ss)
        tol = 5e-15 if al == 0.0 else 1e-11
        eps = evaluate_permittivity(model, f)
        assert eps.real == pytest.approx(er, rel=tol)
        assert eps.imag == pytest.approx(eim, rel=tol)
        assert effective_conductivity(model, f) == pytest.approx(sig, rel=tol)


def test_random_parameter_sets_match_scalar_oracle():
    rng = np.random.default_rng(42)
    for _ in range(20):
        params = (
            float(rng.uniform(1.0, 60.0)),     # eps_inf
            float(rng.uniform(0.0, 60.0)),     # delta_eps
            float(rng.uniform(1e-12, 5e-11)),  # tau
            float(rng.uniform(0.0, 0.5)),      # alpha
            float(rng.uniform(0.0, 2.0)),      # sigma_s
        )
        model = DispersiveModel(*params)
        freqs = rng.uniform(0.5e9, 20e9, size=7)
        eps = evaluate_permittivity(model, freqs)
        sig = effective_conductivity(model, freqs)
        for f, e, s in zip(freqs, eps, sig):
            e_ref = scalar_permittivity(f, *params)
            s_ref = scalar_conductivity(f, *params)
            assert abs(e - e_ref) <= 1e-10 * abs(e_ref)
            assert abs(s - s_ref) <= 1e-10 * abs(s_ref)


def test_permittivity_is_never_gainy():
    rng = np.random.default_rng(7)
    freqs = np.geomspace(0.5e9, 20e9, 50)
    for _ in range(30):
        model = DispersiveModel(
            float(rng.uniform(1.0, 80.0)), float(rng.uniform(0.0, 80.0)),
            float(rng.uniform(1e-13, 1e-10)), float(rng.uniform(0.0, 0.9)),
            float(rng.uniform(0.0, 3.0)))
        eps = evaluate_permittivity(model, freqs)
        assert np.all(eps.imag <= 1e-30)
        assert np.all(effective_conductivity(model, freqs) >= -1e-30)


def test_scalar_and_array_paths_agree():
    model = DispersiveModel(4.0, 33.0, 7.23e-12, 0.0, 0.1)
    f = 6.0e9
    scalar = evaluate_permittivity(model, f)
    arr = evaluate_permittivity(model, np.array([f, 2 * f]))
    assert isinstance(scalar, complex)
    assert scalar == arr[0]


def test_lossless_material_degenerates():
    model = DispersiveModel(eps_inf=40.0)
    eps = evaluate_permittivity(model, 6e9)
    assert eps == 40.0 + 0.0j
    assert effective_conductivity(model, 6e9) == 0.0


def test_conductive_only_material():
    model = DispersiveModel(eps_inf=40.0, sigma_s=0.5)
    # no pole: effective conductivity is the static value at any frequency
    for f in (0.5e9, 6e9, 20e9):
        assert effective_conductivity(model, f) == 0.5
        eps = evaluate_permittivity(model, f)
        assert eps.real == 40.0
        assert eps.imag == pytest.approx(-0.5 / (2 * math.pi * f * 8.8541878128e-12))


def test_frequency_must_be_positive():
    model = DispersiveModel(2.0)
    with pytest.raises(ValueError):
        evaluate_permittivity(model, 0.0)
    with pytest.raises(ValueError):
        effective_conductivity(model, np.array([1e9, -1e9]))


@pytest.mark.parametrize("kwargs", [
    dict(eps_inf=0.5),
    dict(eps_inf=2.0, delta_eps=-1.0),
    dict(eps_inf=2.0, delta_eps=5.0, tau=0.0),
    dict(eps_inf=2.0, alpha=1.0),
    dict(eps_inf=2.0, alpha=-0.1),
    dict(eps_inf=2.0, sigma_s=-0.2),
])
def test_model_invariants_rejected(kwargs):
    with pytest.raises(ValueError):
        DispersiveModel(**kwargs)


def test_material_requires_positive_density():
    with pytest.raises(ValueError):
        Material("thing", DispersiveModel(2.0), density=0.0)
    with pytest.raises(ValueError):
        Material("bad name", DispersiveModel(2.0), density=1.0)


def test_default_table_shape():
    table = default_material_table()
    assert table[0].name == "free_space"
    assert table[0].model.eps_inf == 1.0
    assert table[0].model.sigma_s == 0.0
    assert table[0].density > 0.0  # air has mass; ID 0 is special by convention
    names = [m.name for m in table]
    for required in ("skin", "adipose", "fibroglandular"):
        assert required in names
    # every default entry must be FDTD-compatible (plain Debye)
    assert all(m.model.is_debye for m in table)


def test_table_round_trip(tmp_path):
    table = default_material_table()
    path = tmp_path / "materials.txt"
    save_material_table(table, path)
    loaded = load_material_table(path)
    assert loaded == table


def test_table_parse_errors():
    with pytest.raises(MaterialTableError):
        parse_material_table("only three fields\n")
    with pytest.raises(MaterialTableError):
        parse_material_table(
            "free_space 1.0 0 0 0 0 1.2 0.026 1005 0 0\n"
            "skin 4.0 33.0 nope 0 0.1 1109 0.37 3391 0.0018 1827\n")


def test_table_comments_and_blank_lines():
    text = ("# comment line\n"
            "\n"
            "free_space 1.0 0 0 0 0 1.2 0.026 1005 0 0\n"
            "stuff 2.0 0 0 0 0.3 1000 0.5 3600 0 0  # trailing comment\n")
    table = parse_material_table(text)
    assert len(table) == 2
    assert table[1].name == "stuff"
    assert table[1].model.sigma_s == 0.3
