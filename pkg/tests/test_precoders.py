import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_view
from prescient.network import NetworkConfig, db_to_linear
from prescient.optim import InfeasibleProblem
from prescient.precoders import (Precoder, SumRateObjective, evaluate_sinr, feasibility_slacks,
                                 linear_combination, multicast, multicast_objective,
                                 predicted_detection, prescient_gp, prescient_gp_multistart,
                                 random_feasible, rci, scale_factor)
from prescient.sensing import SensingModel, detection_prob_avg, expected_icr_interference

CFG = NetworkConfig(t_u=3, K_u=3, K=3, r_I=2, P=db_to_linear(15.0), sigma_d2=0.1)


def fd_gradient(f, W, h=1e-6):
    G = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        for unit in (1.0, 1j):
            E = np.zeros_like(W)
            E[idx] = unit * h
            G[idx] += unit * (f(W + E) - f(W - E)) / (2 * h)
    return G


@pytest.mark.parametrize("mode", ["partial-instantaneous-F", "statistical-F"])
@pytest.mark.parametrize("seed", range(4))
def test_sum_rate_gradient_matches_finite_differences(mode, seed):
    _, view = make_view(CFG, seed, mode)
    obj = SumRateObjective(view, CFG)
    W = random_feasible(view, CFG, np.random.default_rng(seed))
    _, G = obj.value_and_grad(W)
    G_fd = fd_gradient(obj.value, W)
    assert np.max(np.abs(G - G_fd)) / np.max(np.abs(G_fd)) < 1e-5


def test_objective_equals_evaluated_sum_rate():
    _, view = make_view(CFG, 3)
    prec = rci(view, CFG)
    obj = SumRateObjective(view, CFG)
    assert obj.value(prec.W) == pytest.approx(evaluate_sinr(prec, view, CFG).sum_rate, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), p_db=st.floats(-5, 30))
def test_rci_feasible_on_boundary(seed, p_db):
    cfg = CFG.replace(P=db_to_linear(p_db))
    _, view = make_view(cfg, seed)
    W = rci(view, cfg).W
    slack = feasibility_slacks(W, view.N, cfg)
    assert min(slack) == pytest.approx(0.0, abs=1e-10)
    assert min(slack) >= -1e-10


def test_rci_k0_has_no_icr_terms():
    cfg = CFG.replace(K=0)
    _, view = make_view(cfg, 0)
    prec = rci(view, cfg)
    rep = evaluate_sinr(prec, view, cfg)
    np.testing.assert_allclose(rep.gamma, rep.beta)
    assert predicted_detection(prec.W, view, cfg).size == 0


def test_scale_factor():
    W = np.eye(2, dtype=complex)
    N = np.eye(2)
    assert scale_factor(W, N, 8.0, 100.0) == 1.0
    assert scale_factor(W, N, 8.0, 100.0, boundary=True) == pytest.approx(2.0)
    assert scale_factor(W, 3 * N, 8.0, 1.8, boundary=True) == pytest.approx(np.sqrt(0.1))


def test_multicast_reaches_top_eigenvalue():
    cfg = CFG.replace(xi_p=1e6)
    _, view = make_view(cfg, 5)
    prec = multicast(view, cfg)
    M = sum(g * F.conj().T @ F for g, F in zip([200.0] * 3, view.F))
    assert prec.objective == pytest.approx(cfg.P * np.linalg.eigvalsh(M)[-1], rel=1e-10)
    # no random precoder with the same power does better
    rng = np.random.default_rng(0)
    for _ in range(200):
        W = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        W *= np.sqrt(cfg.P) / np.linalg.norm(W)
        assert multicast_objective(W, view, cfg) <= prec.objective * (1 + 1e-12)


def test_multicast_respects_pr_cap():
    _, view = make_view(CFG, 5)
    assert min(feasibility_slacks(multicast(view, CFG).W, view.N, CFG)) >= -1e-12


def test_multicast_without_icrs_warns():
    cfg = CFG.replace(K=0)
    _, view = make_view(cfg, 0)
    with pytest.warns(UserWarning):
        prec = multicast(view, cfg)
    assert not np.any(prec.W)


def test_multicast_needs_instantaneous_f():
    _, view = make_view(CFG, 0, "statistical-F")
    with pytest.raises(ValueError):
        multicast(view, CFG)


@pytest.mark.parametrize("seed", range(5))
def test_linear_combination_beats_endpoints(seed):
    _, view = make_view(CFG, seed)
    obj = SumRateObjective(view, CFG)
    prec = linear_combination(view, CFG, objective=obj)
    assert 0.0 <= prec.info["alpha"] <= 1.0
    assert prec.objective >= obj.value(rci(view, CFG).W) - 1e-12
    assert prec.objective == pytest.approx(obj.value(prec.W))
    assert min(feasibility_slacks(prec.W, view.N, CFG)) >= -1e-10


@pytest.mark.parametrize("seed", range(5))
def test_gp_improves_on_its_start_and_stays_feasible(seed):
    _, view = make_view(CFG, seed)
    obj = SumRateObjective(view, CFG)
    start = rci(view, CFG)
    out = prescient_gp(view, CFG, init=start, objective=obj)
    assert out.objective >= obj.value(start.W) - 1e-12
    assert min(feasibility_slacks(out.W, view.N, CFG)) >= -1e-10
    trace = out.info["trace"]
    assert all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))


def test_gp_rejects_infeasible_start():
    _, view = make_view(CFG, 0)
    with pytest.raises(InfeasibleProblem):
        prescient_gp(view, CFG, init=Precoder(100 * np.eye(3), "bad"))


def test_multistart_is_best_of_starts():
    _, view = make_view(CFG, 2)
    best = prescient_gp_multistart(view, CFG, rng=np.random.default_rng(1), n_random=4)
    assert best.info["starts"] == 5
    single = prescient_gp(view, CFG)
    assert best.objective >= single.objective - 1e-12


def test_prescient_designs_raise_predicted_detection():
    gp, ci = [], []
    for seed in range(10):
        _, view = make_view(CFG, seed)
        gp.append(predicted_detection(prescient_gp(view, CFG).W, view, CFG).mean())
        ci.append(predicted_detection(rci(view, CFG).W, view, CFG).mean())
    assert np.mean(gp) > np.mean(ci)


def test_evaluate_sinr_single_user_closed_form():
    cfg = NetworkConfig(t_u=2, K_u=1, K=1, r_I=2, P=4.0, xi_p=1e9)
    _, view = make_view(cfg, 1)
    h = view.H_k[0]
    W = np.sqrt(cfg.P) * h.conj().T / np.linalg.norm(h)
    prec = Precoder(W, "mrt")
    pd = predicted_detection(W, view, cfg)
    ibar = expected_icr_interference(cfg, pd)[0]
    rep = evaluate_sinr(prec, view, cfg)
    g = cfg.P * np.linalg.norm(h) ** 2
    assert rep.beta[0] == pytest.approx(g)
    assert rep.gamma[0] == pytest.approx(g / (1 + ibar))
    model = SensingModel.from_config(cfg)
    np.testing.assert_allclose(pd, detection_prob_avg(model, W, cfg, view.F))


def test_evaluate_sinr_realized_mode_and_errors():
    _, view = make_view(CFG, 0)
    prec = rci(view, CFG)
    zero = [np.zeros((1, 1))] * 3
    rep = evaluate_sinr(prec, view, CFG, "realized", icr_covariances=zero)
    np.testing.assert_allclose(rep.gamma, rep.beta)
    with pytest.raises(ValueError):
        evaluate_sinr(prec, view, CFG, "realized")
    with pytest.raises(ValueError):
        evaluate_sinr(prec, view, CFG, "oracle")


def test_mimo_rate_is_log_det():
    cfg = NetworkConfig(t_u=4, K_u=1, r_u=2, K=0, P=2.0, xi_p=1e9)
    _, view = make_view(cfg, 0)
    W = np.sqrt(cfg.P / 4) * np.eye(4, dtype=complex)[:, :2]
    rep = evaluate_sinr(Precoder(W, "x", block_sizes=(2,)), view, cfg)
    H = view.H_k[0]
    rate = np.log2(np.linalg.det(np.eye(2) + H @ W @ W.conj().T @ H.conj().T).real)
    assert np.log2(1 + rep.gamma[0]) == pytest.approx(rate)


def test_precoder_block_validation():
    with pytest.raises(ValueError):
        Precoder(np.eye(3), "x", block_sizes=(2, 2))
    p = Precoder(np.eye(4), "x", block_sizes=(2, 2))
    assert [b.shape for b in p.blocks()] == [(4, 2), (4, 2)]


@pytest.mark.parametrize("seed", range(3))
def test_partial_sinr_bounds_full_sinr(seed):
    _, view = make_view(CFG, seed)
    for prec in (rci(view, CFG), linear_combination(view, CFG)):
        rep = evaluate_sinr(prec, view, CFG)
        assert np.all(rep.beta >= rep.gamma)
