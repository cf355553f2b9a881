import numpy as np
import pytest
from scipy.special import erfc

from conftest import channel
from grassrelay import schemes
from grassrelay import simulator as sim
from grassrelay.channels import CoherenceSchedule, LinkGains, SystemDims
from grassrelay.codebooks import Codebook
from grassrelay.numerics import RngStream


def _q(x):
    return 0.5 * erfc(x / np.sqrt(2))


def _books(books, N, dim):
    C = books[(dim, N)]
    return sim.CodebookSet({N: {"C0": C, "C1": C, "C2": C}})


@pytest.mark.parametrize("scheme,N,b,expected", [
    ("properly_quantized_dl", 8, 0, 15), ("properly_quantized_dl", 8, 3, 27),
    ("properly_quantized_dl", 16, 2, 28), ("modified_quantized_dl", 8, 5, 19),
    ("modified_quantized_dl", 16, 0, 12), ("mmse_baseline", 8, 7, 61),
])
def test_feedback_bits_table(scheme, N, b, expected):
    assert sim.feedback_bits(scheme, sim.FeedbackBudget(N, N, N, b, 3), SystemDims(3, 3, 3)) == expected


def test_feedback_bits_no_direct():
    d = SystemDims(2, 2, 2)
    assert sim.feedback_bits("mmse_baseline", sim.FeedbackBudget(4, 4, 4, 9), d, direct=False) == 16
    assert sim.feedback_bits("quantized_no_dl", sim.FeedbackBudget(1, 4, 8)) == 5
    assert sim.feedback_bits("optimal_dl", sim.FeedbackBudget(8, 8, 8)) is None


def test_feedback_bits_errors():
    with pytest.raises(ValueError, match="power of two"):
        sim.feedback_bits("modified_quantized_dl", sim.FeedbackBudget(6, 8, 8))
    with pytest.raises(ValueError):
        sim.FeedbackBudget(0, 8, 8)
    with pytest.raises(ValueError):
        sim.feedback_bits("mmse_baseline", sim.FeedbackBudget(8, 8, 8))


def test_curve_spec_parsing():
    c = sim.CurveSpec.parse("quantized_no_dl[N=8]")
    assert c.scheme is sim.SchemeId.QUANTIZED_NO_DL and c.N == 8 and c.label == "quantized_no_dl[N=8]"
    assert sim.CurveSpec.parse(" optimal_dl ").N is None
    with pytest.raises(ValueError):
        sim.CurveSpec.parse("quantized_no_dl")
    with pytest.raises(ValueError):
        sim.CurveSpec.parse("optimal_dl[N=4]")
    with pytest.raises(ValueError):
        sim.CurveSpec.parse("nonsense")


def test_every_scheme_id_has_a_solver(books):
    ch = channel(1, (3, 3, 3))
    no = channel(1, (3, 3, 3), direct=False)
    cs = _books(books, 8, 3)
    cs.random[8] = [{"C1": books[(3, 8)], "C2": books[(3, 8)]}]
    ctx = sim._Context((), SystemDims(3, 3, 3), None, cs, CoherenceSchedule(1, 1), RngStream(1), True, 1)
    for sid in sim.SchemeId:
        spec = sim.CurveSpec(sid, 8 if sid in sim.CODEBOOK_SCHEMES else None)
        sol = sim._solve(ctx, spec, no if sid in sim.NO_DIRECT_ONLY else ch, 0)
        assert isinstance(sol, schemes.BeamformingSolution)


def test_combiner_rules():
    out = sim.combine_two_slots(np.array([2.0]), np.array([5.0]), (1.0, 2.0), (0.5, 0.0))
    assert out[0] == pytest.approx(1.0)
    w = sim.combine_two_slots(np.array([1.0]), np.array([0.0]), (2.0, 2.0), (1.0, 1.0))
    v = sim.combine_two_slots(np.array([0.0]), np.array([1.0]), (2.0, 2.0), (1.0, 1.0))
    assert w[0] == v[0]
    with pytest.raises(ValueError):
        sim.combine_two_slots([1.0], [1.0], (0.0, 1.0), (1, 1))


def test_slot_model_snr_matches_solution(books):
    C = books[(3, 8)]
    for i in range(50):
        ch = channel(10 + i, (3, 3, 3), gains_db=(0, 2, 2))
        for sol in (schemes.optimal_with_direct(ch), schemes.properly_quantized_with_direct(ch, C, C, C),
                    schemes.baseline_mmse_quantizer(ch), schemes.optimal_no_direct(ch)):
            assert sim.slot_model(sol, ch).snr == pytest.approx(sol.snr.gamma_total, rel=1e-9)


def test_empirical_snr_converges():
    ch = channel(3, (3, 3, 3), gains_db=(-2, 3, 3))
    sol = schemes.optimal_with_direct(ch)
    gen = RngStream(4).generator()
    _, draws = sim.draw_interval(gen, ch.dims, 10_000)
    model, y0, y1 = sim.received_slots(sol, ch, draws)
    out = sim.combine_two_slots(y0, y1, (model.v0, model.v1), (model.h0, model.h1))
    gain = np.mean(out * draws.x).real
    noise = out - gain * draws.x
    snr = gain ** 2 / np.mean(np.abs(noise) ** 2)
    assert snr == pytest.approx(sol.snr.gamma_total, rel=0.05)


def test_noiseless_limit(books):
    sw = sim.GainSweep("P1", (60.0,), {"P0": 60.0, "P2": 60.0})
    curves = sim.simulate_ber(["optimal_dl", "properly_quantized_dl[N=8]", "modified_quantized_dl[N=8]",
                               "mmse_baseline", "ignore_direct", "switch_stronger", "modified_unquantized_dl"],
                              SystemDims(3, 3, 3), sw, _books(books, 8, 3), CoherenceSchedule(10, 100), RngStream(5))
    assert all(c.points[0].bit_errors == 0 for c in curves)
    assert all(c.points[0].bits_sent == 1000 for c in curves)


def test_single_antenna_matches_q_function():
    dims = SystemDims(1, 1, 1)
    sw = sim.GainSweep("P1", (4.0,), {"P0": 0.0, "P2": 6.0})
    sched = CoherenceSchedule(4000, 50)
    master = RngStream(6)
    [curve] = sim.simulate_ber(["optimal_no_dl"], dims, sw, sim.CodebookSet(), sched, master, include_direct=False)
    # semi-analytic oracle on the very channels the run used
    g = sw.gains(0)
    p = np.empty(sched.intervals)
    for i in range(sched.intervals):
        (H0, H1, H2), _ = sim.draw_interval(sched.stream(master, i).generator(), dims, sched.symbols_per_interval)
        gam = schemes.relay_snr(g.P1 * abs(H1[0, 0]) ** 2, g.P2 * abs(H2[0, 0]) ** 2)
        p[i] = _q(np.sqrt(2 * gam))
    S = sched.symbols_per_interval
    mean = S * p.sum()
    sd = np.sqrt(S * np.sum(p * (1 - p)))
    assert abs(curve.points[0].bit_errors - mean) <= 3 * sd
    # and against an independent channel population
    gen = RngStream(7).generator()
    h1 = np.abs(gen.standard_normal((10 ** 6, 2)) @ [1, 1j]) ** 2 / 2
    h2 = np.abs(gen.standard_normal((10 ** 6, 2)) @ [1, 1j]) ** 2 / 2
    ref = np.mean(_q(np.sqrt(2 * schemes.relay_snr(g.P1 * h1, g.P2 * h2))))
    se_interval = np.std(p) / np.sqrt(sched.intervals)
    assert abs(curve.points[0].ber - ref) <= 3 * np.hypot(se_interval, curve.points[0].stderr)


def test_quantized_with_optimum_in_codebook_reproduces_errors():
    # in one dimension every channel's optimum is the single codeword (up to phase)
    dims = SystemDims(1, 1, 1)
    C = Codebook([[1.0]])
    cs = sim.CodebookSet({1: {"C1": C, "C2": C}})
    sw = sim.GainSweep("P1", (0.0, 3.0, 6.0), {"P0": 0.0, "P2": 3.0})
    a, b = sim.simulate_ber(["optimal_no_dl", "quantized_no_dl[N=1]"], dims, sw, cs, CoherenceSchedule(200, 50),
                            RngStream(8), include_direct=False)
    assert [p.bit_errors for p in a.points] == [p.bit_errors for p in b.points]


def test_dominance_under_common_randomness(books):
    sw = sim.GainSweep("P1", (0.0, 4.0, 8.0), {"P0": 0.0, "P2": 8.0})
    cs = _books(books, 4, 2)
    opt, q = sim.simulate_ber(["optimal_no_dl", "quantized_no_dl[N=4]"], SystemDims(2, 2, 2), sw, cs,
                              CoherenceSchedule(300, 100), RngStream(9), include_direct=False)
    for a, b in zip(opt.points, q.points):
        assert a.bit_errors <= b.bit_errors + 3 * np.sqrt(b.bits_sent * b.ber * (1 - b.ber))


def test_ber_curve_invariants(books):
    sw = sim.GainSweep("P0", (-4.0, 0.0), {"P1": 2.0, "P2": 2.0})
    [c] = sim.simulate_ber(["modified_quantized_dl[N=8]"], SystemDims(3, 3, 3), sw, _books(books, 8, 3),
                           CoherenceSchedule(20, 30), RngStream(10), b=4)
    for p in c.points:
        assert p.bits_sent == 600 and p.ber == p.bit_errors / p.bits_sent
        assert p.stderr == pytest.approx(np.sqrt(p.ber * (1 - p.ber) / 600))
    assert c.feedback_bits == 9 + 2 * 4 and c.sweep_var == "P0" and len(c.fingerprint) == 16


def test_determinism_and_parallel_agreement(books):
    sw = sim.GainSweep("P1", (0.0, 6.0), {"P0": -2.0, "P2": 2.0})
    args = (["optimal_dl", "properly_quantized_dl[N=8]"], SystemDims(3, 3, 3), sw, _books(books, 8, 3),
            CoherenceSchedule(40, 50), RngStream(11))
    a = sim.simulate_ber(*args, threads=1)
    b = sim.simulate_ber(*args, threads=1)
    c = sim.simulate_ber(*args, threads=3)
    for x, y, z in zip(a, b, c):
        assert [p.bit_errors for p in x.points] == [p.bit_errors for p in y.points] == [p.bit_errors for p in z.points]
        assert x.fingerprint == y.fingerprint == z.fingerprint


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("GRASSRELAY_THREADS", "4")
    assert sim._worker_count(None) == 4
    assert sim._worker_count(2) == 2


def test_fingerprint_depends_on_seed(books):
    sw = sim.GainSweep("P1", (0.0,), {"P0": 0.0, "P2": 2.0})
    args = (["optimal_dl"], SystemDims(3, 3, 3), sw, sim.CodebookSet(), CoherenceSchedule(2, 2))
    a = sim.simulate_ber(*args, RngStream(1))[0].fingerprint
    b = sim.simulate_ber(*args, RngStream(2))[0].fingerprint
    assert a != b


def test_configuration_errors(books):
    sw = sim.GainSweep("P1", (0.0,), {"P0": 0.0, "P2": 2.0})
    d = SystemDims(3, 3, 3)
    sched = CoherenceSchedule(1, 1)
    with pytest.raises(ValueError, match="no schemes"):
        sim.simulate_ber([], d, sw, sim.CodebookSet(), sched, RngStream(1))
    with pytest.raises(ValueError, match="direct link"):
        sim.simulate_ber(["optimal_no_dl"], d, sw, sim.CodebookSet(), sched, RngStream(1), include_direct=True)
    with pytest.raises(ValueError, match="needs the direct link"):
        sim.simulate_ber(["optimal_dl"], d, sw, sim.CodebookSet(), sched, RngStream(1), include_direct=False)
    with pytest.raises(ValueError, match="no Grassmannian"):
        sim.simulate_ber(["properly_quantized_dl[N=16]"], d, sw, _books(books, 8, 3), sched, RngStream(1))
    with pytest.raises(ValueError, match="dimension"):
        sim.simulate_ber(["properly_quantized_dl[N=4]"], d, sw, _books(books, 4, 2), sched, RngStream(1))
    with pytest.raises(ValueError, match="random"):
        sim.simulate_ber(["random_codebook_baseline[N=4]"], d, sw, sim.CodebookSet(), sched, RngStream(1),
                         include_direct=False)


def test_gain_sweep_validation():
    with pytest.raises(ValueError):
        sim.GainSweep("P3", (0.0,), {})
    with pytest.raises(ValueError, match="increasing"):
        sim.GainSweep("P1", (2.0, 1.0), {"P0": 0, "P2": 0})
    with pytest.raises(ValueError, match="missing"):
        sim.GainSweep("P1", (0.0,), {"P2": 0})
    sw = sim.GainSweep("P2", (0.0, 10.0), {"P0": 0, "P1": -10})
    assert sw.gains(1) == LinkGains(1.0, 0.1, 10.0)


def test_csv_rows(books):
    sw = sim.GainSweep("P1", (0.0,), {"P0": 0.0, "P2": 2.0})
    curves = sim.simulate_ber(["optimal_dl", "modified_quantized_dl[N=8]"], SystemDims(3, 3, 3), sw,
                              _books(books, 8, 3), CoherenceSchedule(3, 5), RngStream(1))
    rows = list(sim.ber_rows(curves, 77))
    assert [tuple(r) for r in rows] == [sim.CSV_COLUMNS] * 2
    assert rows[0]["feedback_bits"] == "" and rows[1]["feedback_bits"] == 9
    assert rows[0]["seed"] == 77
