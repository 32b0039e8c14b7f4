import numpy as np
import pytest

from gridpool.decoder import (
    ConfusionCounts,
    DecodeResult,
    Measurements,
    Status,
    classify_outcomes,
    decode,
    measure,
)
from gridpool.design import build_design
from gridpool.loads import INF, LoadGrid, LoadParams, sample_load_grid
from naive_ref import naive_decode, naive_measure, naive_pools


def grid_from(n, entries):
    loads = np.zeros((n, n))
    for (i, j), x in entries.items():
        loads[i, j] = x
    return LoadGrid(n=n, loads=loads)


def test_measure_all_zero():
    d = build_design(4, 3)
    meas = measure(d, grid_from(4, {}))
    assert not meas.values.any()


def test_measure_single_defective():
    d = build_design(3, 2)
    meas = measure(d, grid_from(3, {(0, 0): 0.5}))
    expected = np.zeros(6)
    expected[0] = 0.5  # line 0
    expected[3] = 0.5  # column 0
    assert np.array_equal(meas.values, expected)


def test_measure_three_level_scenario():
    # n=6, L=3, K=4 with defectives at levels 0.25, 0.5, 0.75:
    # every pool containing the 0.75 item reads 0.75
    d = build_design(6, 3)
    entries = {(5, 0): 0.75, (2, 3): 0.5, (0, 4): 0.25}
    grid = grid_from(6, entries)
    meas = measure(d, grid)
    for k in d.pools_of_item(5, 0):
        assert meas.values[k] == 0.75
    assert sorted(set(meas.values.tolist())) <= [0.0, 0.25, 0.5, 0.75]


def test_measure_matches_naive():
    d = build_design(7, 4)
    grid = sample_load_grid(LoadParams(p=0.3, K=5, n=7), 5)
    meas = measure(d, grid)
    assert meas.values.tolist() == naive_measure(naive_pools(7, 4), grid.loads.tolist())


def test_measure_dimension_mismatch():
    d = build_design(4, 3)
    with pytest.raises(ValueError):
        measure(d, grid_from(5, {}))


def test_decode_single_defective_recovered():
    d = build_design(3, 2)
    meas = measure(d, grid_from(3, {(0, 0): 0.5}))
    res = decode(d, meas)
    assert res.statuses[0, 0] == Status.POSITIVE
    assert res.min_value[0, 0] == 0.5 and res.min_count[0, 0] == 2
    others = np.ones((3, 3), dtype=bool)
    others[0, 0] = False
    assert np.all(res.statuses[others] == Status.NEGATIVE)


def test_decode_equal_load_collision_false_positives():
    # two defectives sharing level 0.5 poison both pools of the healthy
    # items (0,0) and (1,1); a brute-force scan confirms exactly those two
    d = build_design(3, 2)
    grid = grid_from(3, {(0, 1): 0.5, (1, 0): 0.5})
    res = decode(d, measure(d, grid))
    assert res.statuses[0, 0] == Status.POSITIVE  # false positive
    assert res.statuses[1, 1] == Status.POSITIVE  # same collision, same effect
    counts = classify_outcomes(res, grid)
    assert counts.false_positive == 2
    assert counts.true_positive == 2


def test_decode_all_zero():
    d = build_design(5, 3)
    res = decode(d, Measurements(values=np.zeros(15), n=5, L=3))
    assert np.all(res.statuses == Status.NEGATIVE)


def test_decode_inconclusive_defective():
    # (0,0) has load 0.5 but both its pools contain a louder defective
    d = build_design(3, 2)
    grid = grid_from(3, {(0, 0): 0.5, (0, 1): 0.8, (1, 0): 0.9})
    res = decode(d, measure(d, grid))
    assert res.statuses[0, 0] == Status.INCONCLUSIVE
    assert res.min_value[0, 0] == 0.8 and res.min_count[0, 0] == 1
    counts = classify_outcomes(res, grid)
    assert counts.inconclusive_defective == 1
    assert counts.binary_false_negative == 1
    assert counts.false_negative == 0  # a defective never has a zero readout


def test_decode_length_mismatch():
    d = build_design(3, 2)
    with pytest.raises(ValueError):
        decode(d, Measurements(values=np.zeros(5), n=3, L=2))


def test_classify_perfect_reconstruction():
    d = build_design(5, 3)
    grid = grid_from(5, {(2, 2): 0.7})
    counts = classify_outcomes(decode(d, measure(d, grid)), grid)
    assert counts.false_positive == 0 and counts.binary_false_negative == 0
    assert counts.true_positive == 1 and counts.total == 25


def test_classify_dimension_mismatch():
    d = build_design(3, 2)
    res = decode(d, measure(d, grid_from(3, {})))
    with pytest.raises(ValueError):
        classify_outcomes(res, grid_from(4, {}))


def test_isolated_defectives_exact():
    # defectives that never share a pool are the max of all their pools
    d = build_design(5, 3)
    entries = {(0, 0): 0.3, (1, 2): 0.9}
    assert not set(d.pools_of_item(0, 0)) & set(d.pools_of_item(1, 2))
    grid = grid_from(5, entries)
    res = decode(d, measure(d, grid))
    counts = classify_outcomes(res, grid)
    assert counts.true_positive == 2 and counts.false_positive == 0
    assert counts.binary_false_negative == 0
    assert np.all(res.min_count[res.statuses == Status.POSITIVE] == 3)


def random_cases(count, seed):
    rng = np.random.default_rng(seed)
    sizes = [(3, 2), (5, 3), (7, 4), (7, 2), (5, 4)]
    ks = [1, 2, 4, INF]
    for t in range(count):
        n, L = sizes[t % len(sizes)]
        K = ks[t % len(ks)]
        p = [0.1, 0.3][t % 2]
        yield n, L, K, p, int(rng.integers(0, 2**62))


def test_upper_bound_and_misclassification_properties():
    # every readout minimum dominates the true load, and a defective is
    # missed by the binary output exactly when its minimum is unique
    for n, L, K, p, seed in random_cases(60, 101):
        d = build_design(n, L)
        grid = sample_load_grid(LoadParams(p=p, K=K, n=n), seed)
        res = decode(d, measure(d, grid))
        assert np.all(res.min_value >= grid.loads)
        defective = grid.loads > 0
        missed = defective & (res.statuses != Status.POSITIVE)
        assert np.array_equal(missed, defective & (res.min_count == 1))


def test_no_false_positive_with_continuous_loads_smoke():
    fp = 0
    for n, L, K, p, seed in random_cases(200, 55):
        d = build_design(n, L)
        grid = sample_load_grid(LoadParams(p=p, K=INF, n=n), seed)
        counts = classify_outcomes(decode(d, measure(d, grid)), grid)
        fp += counts.false_positive
    assert fp == 0


def test_oracle_equivalence_sample():
    mismatches = 0
    for n, L, K, p, seed in random_cases(150, 7):
        d = build_design(n, L)
        grid = sample_load_grid(LoadParams(p=p, K=K, n=n), seed)
        meas = measure(d, grid)
        res = decode(d, meas)
        statuses, vmins, counts = naive_decode(naive_pools(n, L), n, meas.values.tolist())
        name = {Status.NEGATIVE: "negative", Status.POSITIVE: "positive",
                Status.INCONCLUSIVE: "inconclusive"}
        for i in range(n):
            for j in range(n):
                if (name[Status(res.statuses[i, j])] != statuses[i][j]
                        or res.min_value[i, j] != vmins[i][j]
                        or res.min_count[i, j] != counts[i][j]):
                    mismatches += 1
    assert mismatches == 0


def test_measurements_csv_round_trip(tmp_path):
    d = build_design(5, 3)
    grid = sample_load_grid(LoadParams(p=0.4, K=INF, n=5), 3)
    meas = measure(d, grid)
    path = tmp_path / "meas.csv"
    meas.to_csv(path)
    loaded = Measurements.from_csv(path, n=5, L=3)
    assert loaded.values.tobytes() == meas.values.tobytes()


def test_decode_result_csv_round_trip(tmp_path):
    d = build_design(5, 3)
    grid = sample_load_grid(LoadParams(p=0.4, K=4, n=5), 9)
    res = decode(d, measure(d, grid))
    path = tmp_path / "result.csv"
    res.to_csv(path)
    loaded = DecodeResult.from_csv(path)
    assert np.array_equal(loaded.statuses, res.statuses)
    assert loaded.min_value.tobytes() == res.min_value.tobytes()
    assert np.array_equal(loaded.min_count, res.min_count)


def test_confusion_counts_sum():
    counts = ConfusionCounts(1, 2, 3, 0, 4, 5)
    assert counts.total == 15
    assert counts.binary_false_negative == 4
    assert counts.binary_true_negative == 8
