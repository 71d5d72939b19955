import numpy as np
import pytest

from rswmaxwell import algebra as al
from rswmaxwell import fields as fl
from rswmaxwell.grid import Grid, random_bandlimited
from rswmaxwell.medium import MediumSpec, sample

from conftest import plane, rel

G = Grid((4, 4, 4))


def uniform(vec, grid=G):
    return np.asarray(vec, dtype=complex)[:, None, None, None] * np.ones(grid.shape)


def at0(a):
    return a[(slice(None), 0, 0, 0)]


def const(eps=1.0, mu=1.0, grid=G):
    return sample(MediumSpec.constant(eps, mu), grid)


def test_em_to_F_hand_value():
    # sqrt(eps) Ex / sqrt(2) with eps = 2 and Ex = 1 is exactly 1
    f = fl.em_to_F(fl.EMState(uniform([1, 0, 0]), uniform([0, 0, 0])), const(2.0, 1.0))
    assert np.allclose(at0(f), [1, 0, 0, 0, 0, 0, 0, 0], atol=1e-15)


def test_em_to_F_zero():
    f = fl.em_to_F(fl.EMState.zeros(G), const())
    assert not np.any(f)


def test_em_F_round_trip(rng):
    med = sample(MediumSpec.analytic("2 + sin(2*pi*x)", "1.5 + 0.5*cos(2*pi*y)"), G)
    em = fl.EMState(random_bandlimited(G, 3, 0.5, rng), random_bandlimited(G, 3, 0.5, rng))
    back = fl.F_to_em(fl.em_to_F(em, med), med)
    assert rel(back.E, em.E) <= 1e-13 and rel(back.B, em.B) <= 1e-13


def test_rsw_hand_value():
    Fp, Fm = fl.em_to_rsw(fl.EMState(uniform([1, 0, 0]), uniform([0, 1, 0])), const())
    s = 1 / np.sqrt(2)
    assert np.allclose(at0(Fp), [s, 1j * s, 0], atol=1e-15)
    assert np.allclose(at0(Fm), [s, -1j * s, 0], atol=1e-15)


def test_rsw_without_B_is_scaled_E(rng):
    E = random_bandlimited(G, 3, 0.5, rng)
    med = const(3.0, 0.5)
    Fp, Fm = fl.em_to_rsw(fl.EMState(E, np.zeros_like(E)), med)
    assert rel(Fp, np.sqrt(1.5) * E) <= 1e-15 and rel(Fm, Fp) == 0


def test_rsw_helicity_cancellation():
    # circular polarisation along z: E0 = (1, i, 0), B0 = z_hat x E0 = (-i, 1, 0)
    g = Grid((4, 4, 8))
    k = g.wavevector([0, 0, 1])
    med = const(grid=g)
    em = fl.make_plane_wave(g, k, [1, 1j, 0], med)
    assert np.allclose(at0(em.B), [-1j, 1, 0])
    Fp, Fm = fl.em_to_rsw(em, med)
    assert np.abs(Fm).max() <= 1e-15
    assert np.abs(Fp).max() > 0.5


def test_unit_F_maps_to_TT_column():
    f = uniform(np.eye(8)[0])
    psi = fl.F_to_psi(f)
    assert np.allclose(at0(psi), np.array([-1, 0, 0, 1, -1, 0, 0, 1]) / 2, atol=1e-15)


def test_psi_matrix_agrees_with_component_formulas(rng):
    med = sample(MediumSpec.analytic("2 + sin(2*pi*x)", "1"), G)
    em = fl.EMState(random_bandlimited(G, 3, 0.5, rng), random_bandlimited(G, 3, 0.5, rng))
    by_matrix = fl.em_to_psi(em, med)
    by_formula = fl.rsw_to_psi(*fl.em_to_rsw(em, med))
    assert rel(by_matrix, by_formula) <= 1e-14
    assert fl.duplicate_residual(by_matrix) <= 1e-15


def test_round_trips(rng):
    f = random_bandlimited(G, 8, 0.5, rng)
    f[list(fl.NULL_SLOTS)] = 0
    psi = fl.F_to_psi(f)
    assert rel(fl.psi_to_F(psi), f) <= 1e-14
    assert rel(fl.phi_to_psi(fl.psi_to_phi(psi)), psi) == 0
    Fp, Fm = fl.psi_to_rsw(psi)
    assert rel(fl.rsw_to_psi(Fp, Fm), psi) <= 1e-14


def test_phi_regrouping(rng):
    Fp = rng.normal(size=3) + 1j * rng.normal(size=3)
    Fm = rng.normal(size=3) + 1j * rng.normal(size=3)
    phi = at0(fl.psi_to_phi(fl.rsw_to_psi(uniform(Fp), uniform(Fm))))
    want_plus = 0.5 * np.array([-Fp[0] + 1j * Fp[1], Fp[2], -Fm[0] - 1j * Fm[1], Fm[2]])
    assert np.allclose(phi[:4], want_plus, atol=1e-15)


def test_frak_zero():
    assert not np.any(fl.sources_to_frak(fl.SourceState.zeros(G), const()))


def test_frak_hand_value():
    # J = z_hat, eps = 1/2, v = 1: prefactor 1/(2 sqrt(2 eps)) = 1/2
    src = fl.SourceState(uniform([0, 0, 1]), np.zeros(G.shape))
    out = fl.sources_to_frak(src, const(0.5, 2.0))
    assert np.allclose(at0(out), np.array([0, 1, 1, 0, 0, 1, 1, 0]) / 2, atol=1e-15)


def test_frak_charge_pattern():
    src = fl.SourceState(uniform([0, 0, 0]), 3.0 * np.ones(G.shape))
    out = at0(fl.sources_to_frak(src, const(0.5, 2.0)))
    assert out[1] == -out[2] != 0 and out[5] == -out[6] == out[1]
    assert out[0] == out[3] == out[4] == out[7] == 0


def test_frak_is_transformed_calJ(rng):
    med = sample(MediumSpec.analytic("2 + sin(2*pi*x)", "1.2"), G)
    src = fl.SourceState(random_bandlimited(G, 3, 0.5, rng), random_bandlimited(G, None, 0.5, rng))
    assert rel(fl.F_to_psi(fl.sources_to_calJ(src, med)), fl.sources_to_frak(src, med)) <= 1e-14


def test_energy_zero_and_uniform():
    assert fl.energy(np.zeros((8,) + G.shape), G) == 0
    f = fl.em_to_F(fl.EMState(uniform([1, 0, 0]), uniform([0, 0, 0])), const())
    assert np.allclose(fl.energy_density(f), 0.5)


def test_plane_wave_energy_matches_quadrature():
    g = Grid((8, 8, 8), (1.0, 2.0, 1.5))
    med = const(2.0, 0.7, g)
    em = fl.make_plane_wave(g, g.wavevector([1, 1, -2]), [0.3, 1.0 - 0.2j, 0.1], med)
    # quadrature on E, B without any 8-vector machinery
    dens = 0.5 * (2.0 * np.sum(np.abs(em.E) ** 2, 0) + np.sum(np.abs(em.B) ** 2, 0) / 0.7)
    want = dens.sum() * np.prod(g.spacing)
    assert abs(fl.energy(fl.em_to_F(em, med), g) - want) / want <= 1e-12
    assert abs(fl.em_energy(em, med) - want) / want <= 1e-12


def test_plane_wave_triad():
    g = Grid((4, 4, 8))
    em = fl.make_plane_wave(g, g.wavevector([0, 0, 1]), [1, 0, 0], const(grid=g))
    assert np.allclose(at0(em.B), [0, 1, 0], atol=1e-15)


@pytest.mark.parametrize("m", [[0, 0, 1], [1, 2, 0], [1, -1, 1]])
def test_plane_wave_transversality(m):
    g = Grid((8, 8, 8))
    k = g.wavevector(m)
    Fp, Fm = fl.plane_wave_amplitudes(k, [0.3, -0.2, 1.0 + 0.5j], 1.0, 1.0)
    for name, r in fl.transversality_residuals(k, Fp, Fm).items():
        assert r <= 1e-12, name
    em = fl.make_plane_wave(g, k, [0.3, -0.2, 1.0 + 0.5j], const(grid=g))
    for F in fl.em_to_rsw(em, const(grid=g)):
        assert np.abs(g.div(F)).max() <= 1e-12 * np.linalg.norm(k)


def test_plane_wave_errors():
    g = Grid((8, 8, 8))
    with pytest.raises(ValueError, match="nonzero"):
        fl.make_plane_wave(g, [0, 0, 0], [1, 0, 0], const(grid=g))
    with pytest.raises(ValueError, match="not a mode"):
        fl.make_plane_wave(g, [0, 0, 1.0], [1, 0, 0], const(grid=g))
    with pytest.raises(ValueError, match="parallel"):
        fl.make_plane_wave(g, g.wavevector([0, 0, 1]), [0, 0, 1], const(grid=g))
    graded = sample(MediumSpec.analytic("2 + sin(2*pi*x)", "1"), g)
    with pytest.raises(ValueError, match="constant"):
        fl.make_plane_wave(g, g.wavevector([0, 0, 1]), [1, 0, 0], graded)


def test_divergence_free_state(rng):
    g = Grid((12, 12, 12))
    med = sample(MediumSpec.analytic("2 + 0.3*sin(2*pi*x)", "1"), g)
    em = fl.divergence_free_em(g, med, rng)
    scale = np.abs(em.B).max() * g.k_max
    assert np.abs(g.div(med.eps * em.E)).max() <= 1e-12 * scale
    assert np.abs(g.div(em.B)).max() <= 1e-12 * scale
    assert np.all(np.isreal(em.E))


def test_state_shape_checks():
    with pytest.raises(ValueError):
        fl.EMState(np.zeros((2, 4, 4, 4)), np.zeros((3, 4, 4, 4)))
    with pytest.raises(ValueError):
        fl.em_to_F(fl.EMState.zeros(Grid((4, 4, 5))), const())


def test_apply_matrix_uses_constant_set(rng):
    f = random_bandlimited(G, 8, 0.5, rng)
    m = al.ConstantSet().mutated("TT", 0, 4)
    assert rel(fl.F_to_psi(f, m), fl.F_to_psi(f)) > 0.01
