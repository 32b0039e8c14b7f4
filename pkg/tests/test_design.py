import itertools

import numpy as np
import pytest

from gridpool.design import (
    DesignError,
    GridDesign,
    build_design,
    certify_design,
    double_crossing_pair,
    smallest_prime_divisor,
    validate_design,
)
from naive_ref import naive_pools, naive_smallest_prime_divisor, pairwise_intersections_ok


@pytest.mark.parametrize("n,expected", [(49, 7), (6, 2), (31, 31), (2, 2), (9, 3), (35, 5)])
def test_smallest_prime_divisor(n, expected):
    assert smallest_prime_divisor(n) == expected
    assert smallest_prime_divisor(n) == naive_smallest_prime_divisor(n)


def test_smallest_prime_divisor_domain():
    with pytest.raises(ValueError):
        smallest_prime_divisor(1)
    with pytest.raises(ValueError):
        smallest_prime_divisor(0)


@pytest.mark.parametrize("n,L,ok", [(6, 3, True), (6, 4, False), (7, 4, True),
                                    (9, 4, True), (9, 5, False), (5, 6, True), (5, 7, False)])
def test_validate_design(n, L, ok):
    assert validate_design(n, L) is ok


def test_validate_design_matches_brute_force():
    # the "if and only if": the naive family doubly crosses exactly when invalid
    for n in range(2, 16):
        for L in range(2, min(n + 1, 9) + 1):
            ok = validate_design(n, L)
            pools = naive_pools(n, L)
            assert pairwise_intersections_ok(pools) is ok, (n, L)


def test_build_design_3_2():
    d = build_design(3, 2)
    assert d.n_pools == 6
    assert [m[0] for m in d.meta] == ["line"] * 3 + ["column"] * 3
    counts = np.bincount((d.row_idx * 3 + d.col_idx).ravel(), minlength=9)
    assert set(counts.tolist()) == {2}
    assert pairwise_intersections_ok(d.pools)


def test_build_design_6_3_diagonal_through_bottom_left():
    d = build_design(6, 3)
    assert d.n_pools == 18
    diag = [k for k in d.pools_of_item(5, 0) if d.meta[k][0] == "diagonal"]
    assert len(diag) == 1
    kind, slope, offset = d.meta[diag[0]]
    assert slope == 1 and offset == (0 - 5) % 6
    # the slope-1 diagonal wraps: column index is k + offset mod 6
    assert d.pools[diag[0]] == frozenset((k, (k + offset) % 6) for k in range(6))


def test_build_design_5_4_all_pairwise_intersections():
    d = build_design(5, 4)
    assert d.n_pools == 20
    for pa, pb in itertools.combinations(d.pools, 2):
        assert len(pa & pb) <= 1


def test_build_design_matches_naive_construction():
    for n, L in [(3, 2), (5, 3), (6, 3), (7, 4), (11, 5)]:
        d = build_design(n, L)
        assert [set(p) for p in d.pools] == [set(p) for p in naive_pools(n, L)]


def test_build_design_deterministic():
    a = build_design(7, 4)
    b = build_design(7, 4)
    assert a.row_idx.tobytes() == b.row_idx.tobytes()
    assert a.col_idx.tobytes() == b.col_idx.tobytes()
    assert a.meta == b.meta


def test_build_design_rejects_invalid():
    with pytest.raises(DesignError, match="smallest prime divisor"):
        build_design(6, 4)
    with pytest.raises(DesignError):
        build_design(9, 5)
    with pytest.raises(DesignError):
        build_design(4, 6)  # L > n+1
    with pytest.raises(ValueError):
        build_design(1, 2)


def test_pools_of_item_3_2():
    d = build_design(3, 2)
    # item (1, 2): its line pool and its column pool
    assert d.pools_of_item(1, 2) == [1, 3 + 2]


def test_pools_of_item_bands():
    d = build_design(5, 3)
    for i in range(5):
        for j in range(5):
            a, b, c = d.pools_of_item(i, j)
            assert 0 <= a < 5 and 5 <= b < 10 and 10 <= c < 15


def test_pools_of_item_matches_linear_scan():
    d = build_design(7, 4)
    for i, j in [(0, 0), (3, 5), (6, 6)]:
        scan = [k for k, pool in enumerate(d.pools) if (i, j) in pool]
        assert d.pools_of_item(i, j) == scan


def test_pools_of_item_out_of_range():
    d = build_design(3, 2)
    with pytest.raises(ValueError):
        d.pools_of_item(3, 0)
    with pytest.raises(ValueError):
        d.pools_of_item(0, -1)


@pytest.mark.parametrize("n,L", [(5, 4), (7, 6), (11, 8), (13, 3), (6, 3), (9, 4), (25, 6)])
def test_certify_valid_designs(n, L):
    certify_design(build_design(n, L))


def test_certify_small_primes_up_to_max_directions():
    # every direction count up to min(14, n+1) works on small prime grids
    for n in (3, 5, 7, 11, 13):
        for L in range(2, min(14, n + 1) + 1):
            certify_design(build_design(n, L))


def test_certify_catches_double_crossing():
    bad = build_design(6, 4, check=False)
    with pytest.raises(DesignError, match="share"):
        certify_design(bad)


def test_double_crossing_pair_composites():
    # whenever L-2 reaches the smallest prime divisor, two pools share >= 2 items
    for n in range(4, 31):
        p = smallest_prime_divisor(n)
        if p == n:  # prime: no violating L exists below n+1
            continue
        L = p + 2
        if L > n + 1:
            continue
        found = double_crossing_pair(n, L)
        assert found is not None, (n, L)
        k1, k2, shared = found
        assert len(shared) >= 2
    # larger direction counts past the threshold stay broken
    for n, L in [(6, 5), (9, 6), (12, 5)]:
        assert double_crossing_pair(n, L) is not None
    assert double_crossing_pair(7, 4) is None


def test_design_csv_round_trip(tmp_path):
    d = build_design(7, 4)
    path = tmp_path / "design.csv"
    d.to_csv(path)
    loaded = GridDesign.from_csv(path)
    assert loaded.n == 7 and loaded.L == 4
    assert loaded.pools == d.pools
    assert loaded.meta == d.meta
    assert np.array_equal(loaded.flat_item_pools, d.flat_item_pools)


def test_design_csv_rejects_corrupt(tmp_path):
    d = build_design(3, 2)
    path = tmp_path / "design.csv"
    d.to_csv(path)
    text = path.read_text().splitlines()
    path.write_text("\n".join(text[:-1]) + "\n")  # drop one membership row
    with pytest.raises(DesignError):
        GridDesign.from_csv(path)
