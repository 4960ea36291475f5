import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import A, B, T, TI
from diagonal_oe import DeltaElement, DiagonalProduct, DihedralBackend, Schedule
from oracle import DihedralPerm, FullDelta, perm_to_id_map

COMMUTATOR_WORD = [T, T, A, TI, TI, B, T, T, A, TI, TI, B]


def d4_pair(d4):
    model = DihedralPerm(4)
    full = FullDelta([2], [model])
    return full, perm_to_id_map(d4.levels[0], model)


def random_word(rng, letters, length):
    return [rng.choice(letters) for _ in range(length)]


def agrees_with_oracle(d4, full, ids, x, fx, span=range(-12, 13)):
    if x.t != fx[0]:
        return False
    for p in span:
        ia, ib = divmod(d4.reconstruct_level(x, 0, p), d4.nb)
        if (ia, ib) != full.value(fx, 0, p):
            return False
        if d4.reconstruct_level(x, 1, p) != ids[full.value(fx, 1, p)]:
            return False
    return True


# -- generators ----------------------------------------------------------------------


def test_cursor_generator(d4):
    assert d4.generator(T) == DeltaElement(1, (), ((),))


def test_a_write_reconstructs_a_at_origin(d4):
    x = d4.generator(A)
    backend = d4.levels[0]
    assert d4.reconstruct_level(x, 1, 0) == backend.a_elements[1]
    assert d4.level_config(x, 1) == {0: backend.a_elements[1]}
    assert x.gprime == ((),)


def test_b_write_reconstructs_b_at_k(d4):
    x = d4.generator(B)
    backend = d4.levels[0]
    assert d4.reconstruct_level(x, 1, 2) == backend.b_elements[1]
    assert d4.level_config(x, 1) == {2: backend.b_elements[1]}
    assert x.g0 == ((0, 1),)


def test_fig_ab_element(d4):
    x = d4.multiply(d4.generator(A), d4.multiply(d4.generator(B), d4.cursor(3)))
    assert x.t == 3
    assert dict(x.g0) == {0: 1 * d4.nb + 1}
    assert x.gprime == ((),)
    backend = d4.levels[0]
    assert d4.reconstruct_level(x, 1, 2) == backend.b_elements[1]
    assert d4.reconstruct_level(x, 1, 0) == backend.a_elements[1]
    assert d4.essential_contribution(x, 1) == 0


def test_commutator_example(d4):
    x = d4.evaluate_word(COMMUTATOR_WORD)
    backend = d4.levels[0]
    a, b = backend.a_elements[1], backend.b_elements[1]
    expected = backend.mul(backend.mul(a, b), backend.mul(backend.inv(a), backend.inv(b)))
    assert x.t == 0 and x.g0 == ()
    assert x.gprime == (((2, expected),),)
    length = d4.word_length_exact(x, radius_cap=20, node_cap=2_000_000)
    assert length == 12 == 4 * 2 + 4
    assert len(d4.write_word(x)) == 12


def test_identity_reconstruction(d4):
    for m in (0, 1):
        for p in range(-3, 4):
            assert d4.reconstruct_level(d4.identity, m, p) == 0
    with pytest.raises(ValueError):
        d4.reconstruct_level(d4.identity, 2, 0)


# -- oracle equivalence ----------------------------------------------------------------


def test_evaluate_matches_full_oracle(d4):
    full, ids = d4_pair(d4)
    rng = random.Random(1)
    for _ in range(300):
        w = random_word(rng, d4.letters, rng.randint(0, 14))
        assert agrees_with_oracle(d4, full, ids, d4.evaluate_word(w), full.evaluate(w))


def test_multiply_matches_full_oracle(d4):
    full, ids = d4_pair(d4)
    rng = random.Random(2)
    for _ in range(300):
        u = random_word(rng, d4.letters, rng.randint(0, 10))
        v = random_word(rng, d4.letters, rng.randint(0, 10))
        x = d4.multiply(d4.evaluate_word(u), d4.evaluate_word(v))
        fx = full.multiply(full.evaluate(u), full.evaluate(v))
        assert agrees_with_oracle(d4, full, ids, x, fx, range(-22, 23))
        assert x == d4.evaluate_word(u + v)


def test_multiply_identity_and_inverse(d4):
    rng = random.Random(3)
    for _ in range(200):
        x = d4.evaluate_word(random_word(rng, d4.letters, 8))
        assert d4.multiply(x, d4.identity) == x == d4.multiply(d4.identity, x)
        xi = d4.inverse(x)
        assert d4.multiply(x, xi) == d4.identity == d4.multiply(xi, x)
        assert d4.is_valid(x) and d4.is_valid(xi)


def test_group_axioms_in_radius_six_ball(d4):
    rng = random.Random(4)
    ball = [d4.evaluate_word(random_word(rng, d4.letters, rng.randint(0, 6))) for _ in range(400)]
    for _ in range(10_000):
        x, y, z = rng.choice(ball), rng.choice(ball), rng.choice(ball)
        assert d4.multiply(d4.multiply(x, y), z) == d4.multiply(x, d4.multiply(y, z))
    for x in ball:
        assert d4.multiply(x, d4.inverse(x)) == d4.identity


def test_power(d4):
    x = d4.generator(A)
    assert d4.power(x, 2) == d4.identity
    c = d4.evaluate_word(COMMUTATOR_WORD)
    # [a, b] = (ab)^2 is the half-turn r^2 in D_4
    assert c != d4.identity and d4.power(c, 2) == d4.identity
    assert d4.power(c, -1) == d4.inverse(c)


def test_schedule_mismatch_rejected(d4, lamplighter):
    with pytest.raises(ValueError):
        d4.multiply(d4.identity, lamplighter.identity)


def test_odd_dihedral_level_rejected():
    from diagonal_oe import HypothesisError
    with pytest.raises(HypothesisError):
        DiagonalProduct(Schedule(2, 3, (0, 2), (1, 3), True), [DihedralBackend(3)])


# -- range ------------------------------------------------------------------------------


def test_range_examples(d4, lamplighter):
    assert d4.compute_range(d4.identity) == (0, 0)
    assert lamplighter.compute_range(lamplighter.identity) == (0, 0)
    w = [A, T] * 6 + [A, TI, TI, TI, B]
    x = d4.evaluate_word(w)
    lo, hi = d4.compute_range(x)
    assert (lo, hi) == (0, 6)
    assert all(2 <= p <= 6 for p, _ in x.gprime[0])
    assert d4.range_length(x) == 6


def _min_word_range(product, max_len):
    best = {}
    for n in range(max_len + 1):
        for w in itertools.product(product.letters, repeat=n):
            x = product.evaluate_word(w)
            lo, hi = product.word_range(w)
            cur = best.get(x)
            if cur is None or hi - lo < cur[1] - cur[0]:
                best[x] = (lo, hi)
    return best


@pytest.fixture(scope="module")
def short_words(d4):
    return _min_word_range(d4, 6)


def test_range_equals_minimal_word_range(d4, short_words):
    # the writer reaches compute_range, so it is the minimum over all words
    for x, (lo, hi) in short_words.items():
        clo, chi = d4.compute_range(x)
        assert (lo, hi) == (clo, chi)
        w = d4.write_word(x)
        assert d4.evaluate_word(w) == x
        assert d4.word_range(w) == (clo, chi)


def test_range_in_interval_gives_support_conditions(d4, short_words):
    for x, (lo, hi) in short_words.items():
        if lo < 0:
            continue
        n = hi
        assert 0 <= x.t <= n
        assert all(0 <= p <= n for p, _ in x.g0)
        k1 = d4.k[0]
        assert all(k1 <= p <= n for p, _ in x.gprime[0])


def test_writer_on_conforming_support_data(d4):
    backend = d4.levels[0]
    derived = sorted(set(backend.derived_subgroup) - {0})
    rng = random.Random(5)
    for _ in range(100):
        n = rng.randint(2, 6)
        g0 = {p: rng.randrange(d4.gamma0.order) for p in range(n + 1) if rng.random() < 0.5}
        gp = {p: rng.choice(derived) for p in range(2, n + 1) if rng.random() < 0.4}
        x = DeltaElement(rng.randint(0, n), tuple(sorted((p, v) for p, v in g0.items() if v)),
                         (tuple(sorted(gp.items())),))
        assert d4.is_valid(x)
        w = d4.write_word(x)
        assert d4.evaluate_word(w) == x
        lo, hi = d4.word_range(w)
        assert 0 <= lo and hi <= n


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([A, B, T, TI]), max_size=10), st.lists(st.sampled_from([A, B, T, TI]), max_size=10))
def test_range_of_product_contained(u, v):
    d4 = DiagonalProduct(Schedule(2, 2, (0, 2), (1, 4), True), [DihedralBackend(4)])
    x, y = d4.evaluate_word(u), d4.evaluate_word(v)
    lo, hi = d4.compute_range(d4.multiply(x, y))
    xlo, xhi = d4.compute_range(x)
    ylo, yhi = d4.compute_range(y)
    assert min(xlo, x.t + ylo) <= lo and hi <= max(xhi, x.t + yhi)


# -- metric -------------------------------------------------------------------------------


def test_metric_identity_and_generators(d4, lamplighter):
    for product in (d4, lamplighter):
        assert product.metric_upper_bound(product.identity) == 0
        assert product.word_length_exact(product.identity) == 0
        for s, g in product.generators():
            assert product.word_length_exact(g) == 1 <= product.metric_upper_bound(g)


def test_essential_contribution_single_lamp(d4):
    backend = d4.levels[0]
    k1 = d4.k[0]
    for g in set(backend.derived_subgroup) - {0}:
        x = DeltaElement(0, (), (((0, g),),))
        # lamp at 0 with g' only: range needs 0 and -k_1, blocks met are j = -2..0
        assert d4.essential_contribution(x, 1) == k1 * max(backend.word_length(g) - 1, 0)
    assert d4.essential_contribution(d4.identity, 1) == 0
    with pytest.raises(ValueError):
        d4.essential_contribution(d4.identity, 2)


def test_metric_sandwich_on_samples(d4):
    rng = random.Random(6)
    for _ in range(200):
        x = d4.evaluate_word(random_word(rng, d4.letters, rng.randint(1, 7)))
        exact = d4.word_length_exact(x, radius_cap=16, node_cap=200_000)
        assert exact is not None
        assert exact <= len(d4.write_word(x)) or exact <= d4.metric_upper_bound(x)
        assert exact <= d4.metric_upper_bound(x)


def _plain_bfs(product, radius):
    dist = {product.identity: 0}
    frontier = [product.identity]
    for d in range(1, radius + 1):
        nxt = []
        for u in frontier:
            for s in product.letters:
                v = product.mul_letter(u, s)
                if v not in dist:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    return dist


def test_bidirectional_bfs_matches_plain_bfs(d4):
    dist = _plain_bfs(d4, 6)
    rng = random.Random(7)
    for x in rng.sample(sorted(dist, key=d4.serialize), 300):
        assert d4.word_length_exact(x, radius_cap=6) == dist[x]


def test_bfs_cap_returns_unknown(d4):
    x = d4.cursor(10)
    assert d4.word_length_exact(x, radius_cap=5) is None
    assert d4.word_length_exact(x, radius_cap=10) == 10


def test_lamplighter_metric(lamplighter):
    x = lamplighter.evaluate_word([A, T, T, B, T, TI, TI, TI])
    assert x.gprime == ()
    assert lamplighter.word_length_exact(x) == len(lamplighter.write_word(x))


# -- serialization --------------------------------------------------------------------------


def test_serialize_round_trip(d4, lamplighter):
    assert d4.serialize(d4.identity) == "0 | - | m=1 -"
    assert lamplighter.serialize(lamplighter.identity) == "0 | -"
    rng = random.Random(8)
    for product in (d4, lamplighter):
        for _ in range(200):
            x = product.evaluate_word(random_word(rng, product.letters, 10))
            line = product.serialize(x)
            assert product.parse(line) == x


def test_parse_rejects_bad_lines(d4):
    for line in ("0 | -", "0 | - | m=2 -", "0 | 0:4 | m=1 -", "0 | - | m=1 2:1"):
        with pytest.raises(ValueError):
            d4.parse(line)
