import pytest

from conftest import seq
from zerosum.errors import BudgetExceeded, InvalidParams
from zerosum.groups import GroupSpec, build_group, valid_s_values
from zerosum.invariants import (
    InvariantKind as K,
    InvariantReport,
    Mode,
    avoids,
    clear_cache,
    compute_invariant,
    known_witnesses,
    predicted_invariants,
    sample_check,
    universal_check,
    verify_inequalities,
)
from zerosum.inverse import Which, match_normal_form


@pytest.fixture(autouse=True)
def fresh_cache():
    clear_cache()
    yield
    clear_cache()


def test_predicted_values():
    assert predicted_invariants(GroupSpec.mdic(8, 3)) == {K.SmallDavenport: 8, K.Eta: 9, K.EGZ: 16, K.Gao: 24}
    assert predicted_invariants(GroupSpec.mdic(30, 11)) == {K.SmallDavenport: 30, K.Eta: 31, K.EGZ: 90, K.Gao: 90}
    assert predicted_invariants(GroupSpec.cyclic(5)) == {K.EGZ: 9, K.Gao: 9}
    assert predicted_invariants(GroupSpec.dicyclic(3)) == {K.Gao: 18}
    assert predicted_invariants(GroupSpec.c2xc2n(2)) == {K.EGZ: 9, K.Gao: 12}


@pytest.mark.parametrize("spec", [GroupSpec.mdic(8, 3), GroupSpec.mdic(12, 5), GroupSpec.mdic(12, 7),
                                  GroupSpec.mdic(16, 7), GroupSpec.mdic(30, 11), GroupSpec.cyclic(7),
                                  GroupSpec.dicyclic(3), GroupSpec.c2xc2n(2)])
def test_known_witnesses_are_extremal(spec):
    G = build_group(spec)
    for kind, value in predicted_invariants(spec).items():
        (w,) = known_witnesses(G, kind)
        assert len(w) == (value if kind is K.SmallDavenport else value - 1)
        assert avoids(G, w, kind)


def test_universal_check_examples(G8):
    assert universal_check(G8, 9, K.Eta) is None
    bad = universal_check(G8, 8, K.Eta)
    assert bad is not None and len(bad) == 8 and avoids(G8, bad, K.Eta)
    assert universal_check(build_group(GroupSpec.cyclic(3)), 5, K.EGZ) is None
    assert universal_check(build_group(GroupSpec.cyclic(3)), 4, K.EGZ) is not None
    with pytest.raises(InvalidParams):
        universal_check(G8, 0, K.Eta)


def test_small_davenport_of_mdic_8_3(G8):
    rep = compute_invariant(G8, K.SmallDavenport)
    assert rep.computed == 8 and rep.consistent and rep.witness_verified
    assert len(rep.witness) == 8
    # every extremal product-one free sequence of length n has the y^[n-1].x shape
    assert match_normal_form(G8, rep.witness, Which.C) is not None
    assert match_normal_form(G8, seq(G8, y1=7, x0=1), Which.C) is not None


@pytest.mark.parametrize("s", valid_s_values(8))
def test_main_theorem_at_n8(s):
    G = build_group(GroupSpec.mdic(8, s))
    reports = {k: compute_invariant(G, k) for k in K}
    assert {k: r.computed for k, r in reports.items()} == {
        K.SmallDavenport: 8, K.Eta: 9, K.EGZ: 16, K.Gao: 24}
    for kind, rep in reports.items():
        assert rep.consistent and rep.witness_verified
        assert universal_check(G, rep.universal_check_length, kind) is None
    ineq = verify_inequalities(G, reports)
    assert ineq.ok and all(c.equality for c in ineq.checks)


def test_cache_serves_truncated_witness(G8):
    compute_invariant(G8, K.EGZ)
    short = universal_check(G8, 10, K.EGZ)
    assert short is not None and len(short) == 10 and avoids(G8, short, K.EGZ)


@pytest.mark.parametrize("spec,kind,value", [
    (GroupSpec.c2xc2n(1), K.EGZ, 5), (GroupSpec.c2xc2n(1), K.Gao, 6),
    (GroupSpec.c2xc2n(2), K.EGZ, 9), (GroupSpec.c2xc2n(2), K.Gao, 12),
    (GroupSpec.dicyclic(2), K.Gao, 12),
])
def test_baselines_direct_and_lifted(spec, kind, value):
    G = build_group(spec)
    direct = compute_invariant(G, kind, direct=True)
    clear_cache()
    lifted = compute_invariant(G, kind)
    assert direct.computed == lifted.computed == value
    assert direct.method == "max-depth-dfs"


@pytest.mark.parametrize("n", range(2, 13))
def test_cyclic_baseline(n):
    G = build_group(GroupSpec.cyclic(n))
    for kind in (K.EGZ, K.Gao):
        rep = compute_invariant(G, kind)
        assert rep.computed == 2 * n - 1 and rep.consistent


def test_baseline_d_and_eta_are_computed_only():
    G = build_group(GroupSpec.cyclic(5))
    d = compute_invariant(G, K.SmallDavenport)
    eta = compute_invariant(G, K.Eta)
    assert (d.computed, d.predicted, eta.computed, eta.predicted) == (4, None, 5, None)
    s, E = compute_invariant(G, K.EGZ), compute_invariant(G, K.Gao)
    assert verify_inequalities(G, {K.SmallDavenport: d, K.Eta: eta, K.EGZ: s, K.Gao: E}).ok


def test_inequality_failure_flagged(G8):
    fake = {K.SmallDavenport: 8, K.Eta: 9, K.EGZ: 16, K.Gao: 23}
    rep = verify_inequalities(G8, fake)
    assert not rep.ok
    assert [c.holds for c in rep.checks] == [False, True]
    # on the mdic family a strict inequality is also a failure
    assert not verify_inequalities(G8, {K.EGZ: 17, K.Eta: 9}).ok
    C = build_group(GroupSpec.cyclic(5))
    assert verify_inequalities(C, {K.EGZ: 10, K.Eta: 5}).ok


def test_witness_and_sampled_modes(G12):
    rep = compute_invariant(G12, K.Gao, Mode.WitnessOnly)
    assert rep.computed is None and rep.predicted == 36 and rep.witness_verified
    assert len(rep.witness) == 35
    rep = compute_invariant(G12, K.EGZ, Mode.Sampled, samples=300, seed=1)
    assert rep.universal_check_length == 24 and rep.samples == 300
    assert rep.counterexamples == [] and rep.undecided == 0 and rep.consistent
    again = compute_invariant(G12, K.EGZ, Mode.Sampled, samples=300, seed=1)
    assert again.to_json() == rep.to_json()


def test_witness_mode_at_order_60():
    G = build_group(GroupSpec.mdic(30, 11))
    rep = compute_invariant(G, K.EGZ, Mode.WitnessOnly)
    assert rep.predicted == 90 and rep.witness_verified and len(rep.witness) == 89


def test_sampling_finds_counterexamples_below_the_value(G8):
    bad, undecided = sample_check(G8, K.SmallDavenport, 3, 50, seed=2)
    assert bad and undecided == 0
    assert all(avoids(G8, S, K.SmallDavenport) for S in bad)
    bad, _ = sample_check(G8, K.EGZ, 12, 50, seed=2)
    assert all(avoids(G8, S, K.EGZ) for S in bad)


def test_sampled_without_closed_form_rejected():
    with pytest.raises(InvalidParams):
        compute_invariant(build_group(GroupSpec.cyclic(5)), K.Eta, Mode.Sampled, samples=5)


def test_budget_exhaustion_and_resume(tmp_path, G8):
    ck = str(tmp_path / "s.json")
    with pytest.raises(BudgetExceeded):
        compute_invariant(G8, K.EGZ, budget=50_000, checkpoint=ck)
    rep = compute_invariant(G8, K.EGZ, checkpoint=ck)
    assert rep.computed == 16


def test_reports_independent_of_workers(G8):
    one = compute_invariant(G8, K.EGZ, workers=1).to_json()
    clear_cache()
    two = compute_invariant(G8, K.EGZ, workers=2).to_json()
    assert one == two


def test_report_json_shape(G8):
    rep = compute_invariant(G8, K.SmallDavenport)
    out = rep.to_json()
    assert out["kind"] == "d" and out["computed"] == 8 and out["predicted"] == 8
    assert out["mode"] == "exhaustive" and "wall_time" not in out["stats"]
    assert "wall_time" in rep.to_json(timings=True)["stats"]
    assert isinstance(InvariantReport(K.Eta, None, Mode.Exhaustive).consistent, bool)
