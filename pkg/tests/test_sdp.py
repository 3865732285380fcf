import numpy as np
import pytest

from conftest import make_view
from prescient.network import NetworkConfig, db_to_linear
from prescient.optim import InfeasibleProblem, barrier_phase1
from prescient.precoders import default_eta, feasibility_slacks, sdp_maxmin
from prescient.precoders.sdp import _build, partial_sinr

CFG = NetworkConfig(t_u=3, K_u=3, K=3, r_I=2, P=db_to_linear(15.0), sigma_d2=0.1)


def constraint_slacks(J, view, cfg, eta, t):
    """Direct evaluation of every SDP constraint at ``t`` (positive = satisfied)."""
    R = [h.conj().T @ h for h in view.H_k]
    out = []
    for k in range(len(J)):
        sig = np.trace(R[k] @ J[k]).real
        interf = sum(np.trace(R[k] @ J[j]).real for j in range(len(J)) if j != k)
        out.append(sig - t * (interf + 1.0))
    S = sum(J)
    out.append(cfg.P - np.trace(S).real)
    out.append(cfg.xi_p - np.trace(view.N @ S @ view.N.conj().T).real)
    for F, e in zip(view.F, eta):
        out.append(np.trace(F @ S @ F.conj().T).real - e)
    out += [np.linalg.eigvalsh(Jk)[0] for Jk in J]
    return np.array(out)


def cvxpy_margin(view, cfg, eta, t):
    """Largest common slack of the linear SDP constraints at ``t`` (cvxpy)."""
    cp = pytest.importorskip("cvxpy")
    J = [cp.Variable((cfg.t_u, cfg.t_u), hermitian=True) for _ in view.H_k]
    s = cp.Variable()
    R = [h.conj().T @ h for h in view.H_k]
    S = sum(J)
    cons = [Jk >> 0 for Jk in J] + [s <= 1]
    for k in range(len(J)):
        interf = sum(cp.real(cp.trace(R[k] @ J[j])) for j in range(len(J)) if j != k)
        cons.append(cp.real(cp.trace(R[k] @ J[k])) - t * (interf + 1.0) >= s)
    cons.append(cfg.P - cp.real(cp.trace(S)) >= s)
    cons.append(cfg.xi_p - cp.real(cp.trace(view.N.conj().T @ view.N @ S)) >= s)
    for F, e in zip(view.F, eta):
        cons.append(cp.real(cp.trace(F.conj().T @ F @ S)) - e >= s)
    prob = cp.Problem(cp.Maximize(s), cons)
    prob.solve(solver=cp.CLARABEL)
    return float(s.value)


@pytest.fixture(scope="module")
def solved():
    out = []
    for seed in range(3):
        _, view = make_view(CFG, seed)
        eta = default_eta(CFG)
        out.append((view, eta, sdp_maxmin(view, CFG, eta)))
    return out


def test_bisection_bracket_and_width(solved):
    for view, eta, prec in solved:
        lo, hi = prec.info["t_lo"], prec.info["t_hi"]
        assert 0 < lo < hi
        assert hi - lo <= 1e-4 * hi + 1e-12
        assert prec.info["monotone"]


def test_lower_end_has_feasible_witness(solved):
    for view, eta, prec in solved:
        cons = _build(view, CFG, eta, 1.0)
        A, b = cons.system(prec.info["t_lo"])
        res = barrier_phase1(cons.space.sizes, A, b)
        assert res.feasible
        J = cons.space.unpack(res.x[: cons.space.dim])
        assert np.min(constraint_slacks(J, view, CFG, eta, prec.info["t_lo"])) > -1e-9


def test_upper_end_certified_infeasible(solved):
    for view, eta, prec in solved:
        cons = _build(view, CFG, eta, 1.0)
        A, b = cons.system(prec.info["t_hi"])
        res = barrier_phase1(cons.space.sizes, A, b)
        assert not res.feasible and res.upper < 0


def test_bracket_agrees_with_cvxpy(solved):
    for view, eta, prec in solved:
        assert cvxpy_margin(view, CFG, eta, prec.info["t_lo"]) > 0
        assert cvxpy_margin(view, CFG, eta, prec.info["t_hi"]) < 0


def test_extracted_beamformer_feasible(solved):
    for view, eta, prec in solved:
        assert min(feasibility_slacks(prec.W, view.N, CFG)) >= -1e-10
        assert prec.info["min_partial_sinr"] == pytest.approx(
            np.min(partial_sinr(prec.W, view.H_u, np.ones(3))))
        assert prec.info["rank_ratio"].shape == (3,)


def single_user(seed, **kw):
    cfg = NetworkConfig(t_u=3, K_u=1, K=1, r_I=2, **kw)
    _, view = make_view(cfg, seed)
    return cfg, view


@pytest.mark.parametrize("seed", range(3))
def test_single_user_power_limited(seed):
    cfg, view = single_user(seed, P=10.0, xi_p=1e9)
    prec = sdp_maxmin(view, cfg, eta=[0.0])
    t_star = cfg.P * np.linalg.norm(view.H_k[0]) ** 2
    assert prec.objective == pytest.approx(t_star, rel=1e-3)


@pytest.mark.parametrize("seed", range(3))
def test_single_user_pr_limited(seed):
    cfg, view = single_user(seed, P=1e6, xi_p=1.0)
    prec = sdp_maxmin(view, cfg, eta=[0.0])
    h = view.H_k[0].ravel()
    G = view.N.conj().T @ view.N
    t_star = cfg.xi_p * np.real(h @ np.linalg.solve(G, h.conj()))
    assert prec.objective == pytest.approx(t_star, rel=1e-3)


def test_infeasible_floors_raise():
    cfg, view = single_user(0, P=1.0, xi_p=1e9)
    with pytest.raises(InfeasibleProblem):
        sdp_maxmin(view, cfg, eta=[1e3])


def test_multiantenna_users_rejected():
    cfg = NetworkConfig(t_u=4, K_u=2, r_u=2, K=1)
    _, view = make_view(cfg, 0)
    with pytest.raises(ValueError):
        sdp_maxmin(view, cfg)
