import numpy as np
import pytest

from crnjam import estimators as est
from crnjam.su_agents import SecondaryUsers


def _one(algorithm="cdj", k=8, **kw):
    return SecondaryUsers(algorithm, runs=1, n=1, k=k, **kw)


def test_settled_agent_rotates():
    a = _one("cdj", k=8, t_c=1)
    a.finalize_cr()
    a.width[:] = 5
    a.settled[:] = True
    a.x[:] = 2
    ch = a.select(2, np.array([[0.99]]))
    assert ch[0, 0] == a.pi[0, 0, 3] and a.x[0, 0] == 3


def test_unsettled_agent_settles_on_success():
    a = _one("cdj", k=8, t_c=1)
    a.finalize_cr()
    a.width[:] = 5
    ch = a.select(2, np.array([[0.5]]))
    pos = a.pos[0, 0]
    assert pos == 2 and ch[0, 0] == a.pi[0, 0, pos]
    a.observe(2, np.array([[False]]), np.array([[False]]), np.array([[False]]))
    assert a.settled[0, 0] and a.x[0, 0] == pos and a.settle_slot[0, 0] == 2


def test_busy_or_collision_does_not_settle():
    a = _one("cdj", k=8, t_c=1)
    a.finalize_cr()
    for busy, coll in ((True, False), (False, True)):
        a.select(1, np.array([[0.2]]))
        a.observe(1, np.array([[busy]]), np.array([[coll]]), np.array([[False]]))
        assert not a.settled[0, 0]


def test_cr_selection_is_seeded_uniform():
    u = np.array([[0.0, 0.499, 0.999]])
    a = SecondaryUsers("cnj", runs=1, n=3, k=8, t_c=10, t_o=1, t_j=1)
    assert a.select(0, u).tolist() == [[0, 3, 7]]


def test_finalize_cr_ranking():
    a = SecondaryUsers("cnj", runs=1, n=1, k=2, t_c=20, t_o=1, t_j=1)
    a.o[:] = [10, 10]
    a.b_i[:] = [1, 9]
    a.f[:] = 10
    a.finalize_cr()
    assert a.p_hat[0, 0].tolist() == [0.1, 0.9] and a.pi[0, 0].tolist() == [0, 1]
    assert a.width[0, 0] == 2


def test_unobserved_channel_ranked_last():
    a = SecondaryUsers("cnj", runs=1, n=1, k=3, t_c=5, t_o=1, t_j=1)
    a.o[:] = [0, 3, 2]
    a.b_i[:] = [0, 3, 1]
    a.f[:] = 1
    a.finalize_cr()
    assert a.pi[0, 0].tolist() == [2, 0, 1]
    assert a.p_hat[0, 0, 0] == 1.0


def test_cdj_finalize_exact_estimates():
    a = SecondaryUsers("cdj", runs=1, n=1, k=16, t_c=100)
    pc = est.collision_prob(est.COORDINATED, 8, 4, 16)
    a.o[:] = 10
    a.b_i[:] = np.arange(16)
    a.f[:] = 1_000_000
    a.c[:] = round(pc * 1_000_000)
    a.c_j[:] = 250_000
    a.finalize_cr()
    assert a.j_hat[0, 0] == 4 and a.n_hat[0, 0] == 8
    assert a.n_star[0, 0] >= 8 and a.width[0, 0] == a.n_star[0, 0]


def test_cuj_finalize_cr_total():
    a = SecondaryUsers("cuj", runs=1, n=1, k=8, t_c=100, t_o=1, t_j=1)
    a.o[:] = 10
    a.f[:] = 1_000_000
    a.c[:] = round((1 - 0.875**5) * 1_000_000)
    a.finalize_cr()
    assert a.nj_hat[0, 0] == 6 and a.width[0, 0] == 6


def test_cnj_finalize_je_uniform_ratio():
    a = SecondaryUsers("cnj", runs=1, n=1, k=8, t_c=100, t_o=1, t_j=800)
    a.o[:] = 10
    a.f[:] = 1_000_000
    a.c[:] = round(est.collision_prob(est.COORDINATED, 4, 2, 8) * 1_000_000)
    a.finalize_cr()
    a.je_o[:] = 100
    a.je_f[:] = 400
    a.je_c[:] = 100  # ratio J/K = 2/8 on every channel
    a.finalize_je()
    assert a.j_hat[0, 0] == 2 and a.n_hat[0, 0] == 4
    assert not a.settled[0, 0]


def test_cuj_finalize_je_subtracts():
    a = SecondaryUsers("cuj", runs=1, n=1, k=8, t_c=100, t_o=1, t_j=600)
    a.nj_hat[:] = 6
    a.width[:] = 6
    hit = 1 - (1 - 1 / 5) ** 2
    a.je_o[0, 0, :6] = 100
    a.je_f[0, 0, :6] = 10_000
    a.je_c[0, 0, :5] = round(hit * 10_000)
    a.finalize_je()
    assert a.j_hat[0, 0] == 2 and a.n_hat[0, 0] == 4


def test_finalize_je_without_free_slots_degrades():
    a = SecondaryUsers("cnj", runs=1, n=1, k=8, t_c=100, t_o=1, t_j=10)
    a.o[:] = 10
    a.f[:] = 10
    a.finalize_cr()
    a.finalize_je()
    assert a.degraded[0, 0]
    assert (a.n_hat[0, 0], a.j_hat[0, 0], a.n_star[0, 0]) == (1, 0, 1)


def test_zero_free_slots_in_cr_degrades():
    a = SecondaryUsers("cdj", runs=1, n=1, k=8, t_c=10)
    a.o[:] = 1
    a.b_i[:] = 1
    a.finalize_cr()
    assert a.degraded[0, 0] and a.n_star[0, 0] == 1


def test_mc_locks_and_myopic_wraps():
    mc = SecondaryUsers("mc", runs=1, n=1, k=8, t_c=1)
    mc.finalize_cr()
    mc.width[:] = 6
    mc.settled[:] = True
    mc.x[:] = 3
    chans = {int(mc.select(t, np.array([[0.7]]))[0, 0]) for t in range(2, 10)}
    assert chans == {int(mc.pi[0, 0, 3])}
    my = SecondaryUsers("myopic", runs=1, n=1, k=8, t_c=1)
    my.finalize_cr()
    my.width[:] = 6
    my.settled[:] = True
    my.x[:] = 5
    assert my.select(2, np.array([[0.7]]))[0, 0] == my.pi[0, 0, 0]


def test_baselines_hop_uniformly_during_cr():
    for alg in ("myopic", "mc"):
        a = SecondaryUsers(alg, runs=1, n=2, k=8, t_c=5)
        assert a.phase_at(4) == "cr"
        assert a.select(0, np.array([[0.1, 0.9]])).tolist() == [[0, 7]]


def test_phase_boundaries():
    a = SecondaryUsers("cnj", runs=1, n=1, k=8, t_c=10, t_o=5, t_j=3)
    phases = [a.phase_at(t) for t in (9, 10, 14, 15, 17, 18)]
    assert phases == ["cr", "or-learn", "or-learn", "je", "je", "or"]


def test_je_hops_sequentially_from_i0():
    a = SecondaryUsers("cnj", runs=1, n=1, k=4, t_c=2, t_o=1, t_j=8)
    a.select(0, np.array([[0.1]]))
    a.observe(0, np.array([[False]]), np.array([[False]]), np.array([[False]]))
    a.select(1, np.array([[0.6]]))
    a.observe(1, np.array([[False]]), np.array([[False]]), np.array([[False]]))
    a.select(2, np.array([[0.6]]))  # OR-learn, lands on position 2
    a.observe(2, np.array([[False]]), np.array([[False]]), np.array([[False]]))
    positions = []
    for t in range(3, 11):
        a.select(t, np.array([[0.0]]))
        positions.append(int(a.pos[0, 0]))
        a.observe(t, np.array([[False]]), np.array([[False]]), np.array([[False]]))
    assert positions == [3, 0, 1, 2, 3, 0, 1, 2]
    assert a.je_o.sum() == 8 and np.ptp(a.je_o[0, 0]) <= 1


def test_unknown_algorithm():
    with pytest.raises(ValueError):
        SecondaryUsers("greedy", runs=1, n=1, k=4)
