import pickle

import numpy as np
import pytest

from centroaffine import analysis, catalog, geometry, jets
from centroaffine.errors import DomainError, UnknownSurfaceError

KNOWN_TAGS = {"K_zero", "Ktilde_zero", "nablaK_zero", "flat_metric", "equality", "strict", "T_zero"}


def test_default_names():
    names = [e.name for e in catalog.catalog_entries()]
    for fam in ("unit_sphere", "ellipsoid", "hyperboloid", "shifted_paraboloid", "canonical_viii", "perturbed_graph"):
        assert f"{fam}_2" in names and f"{fam}_3" in names
    assert "sl3_so3" in names
    assert len(names) == len(set(names))


def test_get_parametrized_names():
    assert catalog.get("unit_sphere_5").n == 5
    assert catalog.get("perturbed_graph_2_s3_a0.1").n == 2
    for bad in ("nosuch", "unit_sphere_0", "unit_sphere_9", "sl3_so3_2"):
        with pytest.raises(UnknownSurfaceError):
            catalog.get(bad)


@pytest.mark.parametrize("entry", catalog.catalog_entries(), ids=lambda e: e.name)
def test_entry_shape(entry):
    assert entry.tags <= KNOWN_TAGS
    assert len(entry.box) == entry.n
    assert entry.spec.n == entry.n
    for p in entry.sample_points(20, seed=0):
        assert entry.guard_ok(p)
    for p in entry.grid(3):
        assert entry.guard_ok(p)
    pickle.loads(pickle.dumps(entry))


def test_canonical_last_coordinate():
    assert catalog.get("canonical_viii_3").evaluate([1.0, 0.0, 0.0])[-1] == 0.0


def test_sl3_chart_examples():
    np.testing.assert_array_equal(catalog.sl3_so3_chart([0, 0, 0, 1, 1]), [1, 1, 1, 0, 0, 0])
    np.testing.assert_allclose(catalog.sl3_so3_chart([0, 0, 0, 2, 1]), [2, 1, 0.5, 0, 0, 0])
    with pytest.raises(DomainError):
        catalog.sl3_so3_chart([0, 0, 0, -1, 1])


def _sym(v):
    a11, a22, a33, a12, a13, a23 = v
    return np.array([[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]])


def test_sl3_determinant_one(rng):
    for _ in range(50):
        params = np.concatenate([rng.uniform(-2, 2, 3), rng.uniform(0.1, 3, 2)])
        A = _sym(catalog.sl3_so3_chart(params))
        assert np.linalg.det(A) == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.linalg.eigvalsh(A) > 0)


def test_sl3_jacobian_rank():
    entry = catalog.get("sl3_so3")
    for p in entry.sample_points(20, seed=0):
        seeds = [jets.seed_variable(i, v, 5) for i, v in enumerate(p)]
        J = np.array([[c.coeff(tuple(int(k == i) for k in range(5))) for i in range(5)] for c in entry.evaluate(seeds)])
        assert np.linalg.matrix_rank(J, tol=1e-10) == 5


def test_perturbed_graph_deterministic():
    a = catalog.perturbed_graph(2, seed=7, amplitude=0.05)
    b = catalog.perturbed_graph(2, seed=7, amplitude=0.05)
    c = catalog.perturbed_graph(2, seed=8, amplitude=0.05)
    assert a.text == b.text
    assert a.text != c.text


# the expected-property tags must hold at 20 seeded points of the sample box

TAG_CHECKS = {
    "K_zero": lambda d, pr: d.normK <= 1e-8,
    "Ktilde_zero": lambda d, pr: np.sqrt(d.normKtilde2) <= 1e-8 * (1 + d.normK),
    "nablaK_zero": lambda d, pr: d.normNablaK <= 1e-7 * (1 + d.normK),
    "T_zero": lambda d, pr: np.sqrt(d.normT2) <= 1e-7,
    "flat_metric": lambda d, pr: np.sqrt(d.normR2) <= 1e-8,
    "equality": lambda d, pr: pr["equality_slack_zero"],
    "strict": lambda d, pr: not pr["equality_slack_zero"],
}


@pytest.mark.parametrize("entry", catalog.catalog_entries(), ids=lambda e: e.name)
def test_expected_properties(entry):
    for p in entry.sample_points(20, seed=0):
        data = geometry.centroaffine_data(entry, p)
        preds = analysis.predicates(data)
        for tag in entry.tags:
            assert TAG_CHECKS[tag](data, preds), f"{entry.name}: {tag} fails at {p}"
