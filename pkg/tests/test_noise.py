import numpy as np
import pytest

from finekit.errors import (
    InvalidMappingError,
    InvalidRateError,
    InvalidSuperclassError,
    ParseError,
)
from finekit.noise import (
    KIND_ASYMMETRIC_CIRCULAR,
    KIND_ASYMMETRIC_PAIRS,
    KIND_SYMMETRIC,
    NoiseSpec,
    circular_successor,
    inject,
    inject_asymmetric_circular,
    inject_asymmetric_pairs,
    inject_symmetric,
    parse_mapping,
)

CIFAR10_MAPPING_TEXT = "9>1,2>0,4>7,3>5,5>3"


def balanced_labels(num_classes, per_class):
    return np.repeat(np.arange(num_classes), per_class)


# ------------------------------------------------------------- symmetric


def test_symmetric_rate_zero_is_identity():
    labels = balanced_labels(4, 25)
    res = inject_symmetric(labels, NoiseSpec(kind=KIND_SYMMETRIC, rate=0.0,
                                             num_classes=4, seed=3))
    assert np.array_equal(res.observed_labels, labels)
    assert not res.corrupted_mask.any()


def test_symmetric_rate_one_two_classes_flips_everything():
    labels = balanced_labels(2, 30)
    res = inject_symmetric(labels, NoiseSpec(kind=KIND_SYMMETRIC, rate=1.0,
                                             num_classes=2, seed=7))
    assert np.array_equal(res.observed_labels, 1 - labels)
    assert res.corrupted_mask.all()


def test_symmetric_exact_count_and_target_spread():
    labels = balanced_labels(10, 1000)
    res = inject_symmetric(labels, NoiseSpec(kind=KIND_SYMMETRIC, rate=0.2,
                                             num_classes=10, seed=11))
    assert res.num_corrupted == 2000
    assert np.count_nonzero(res.observed_labels != labels) == 2000
    # New labels are uniform over the 9 other classes. Counting oracle:
    # each corrupted sample lands on a given class that is not its true one
    # with p = 1/9; expected hits per target ~ 2000/9 with multinomial std.
    new_labels = res.observed_labels[res.corrupted_mask]
    counts = np.bincount(new_labels, minlength=10)
    expectation = 2000 / 9
    std = np.sqrt(2000 * (1 / 9) * (8 / 9))
    assert np.all(np.abs(counts - expectation) <= 5 * std)


def test_symmetric_never_draws_true_class_by_default():
    labels = balanced_labels(5, 200)
    res = inject_symmetric(labels, NoiseSpec(kind=KIND_SYMMETRIC, rate=0.5,
                                             num_classes=5, seed=13))
    changed = res.corrupted_mask
    assert np.all(res.observed_labels[changed] != labels[changed])
    assert res.num_corrupted == 500


def test_symmetric_include_true_class_mode():
    labels = balanced_labels(5, 200)
    res = inject_symmetric(labels, NoiseSpec(kind=KIND_SYMMETRIC, rate=0.5,
                                             num_classes=5, seed=13,
                                             include_true_class=True))
    # floor(0.5 * 1000) = 500 draws, but ~1/5 of them redraw the true class,
    # so the realized corruption count falls below the pick count.
    assert res.num_corrupted < 500
    assert res.num_corrupted > 300


def test_symmetric_invalid_rate():
    with pytest.raises(InvalidRateError):
        NoiseSpec(kind=KIND_SYMMETRIC, rate=1.5, num_classes=3)
    with pytest.raises(InvalidRateError):
        NoiseSpec(kind=KIND_SYMMETRIC, rate=-0.1, num_classes=3)


# ------------------------------------------------------------ pair flips


def test_pair_mapping_parse():
    mapping = parse_mapping(CIFAR10_MAPPING_TEXT, 10)
    assert mapping == [(9, 1), (2, 0), (4, 7), (3, 5), (5, 3)]


def test_pair_mapping_parse_errors():
    with pytest.raises(ParseError):
        parse_mapping("9->1", 10)
    with pytest.raises(ParseError):
        parse_mapping("a>b", 10)
    with pytest.raises(InvalidMappingError):
        parse_mapping("12>1", 10)
    with pytest.raises(InvalidMappingError):
        parse_mapping("3>3", 10)


def test_pair_flip_exact_counts_cifar_mapping():
    labels = balanced_labels(10, 1000)
    spec = NoiseSpec(kind=KIND_ASYMMETRIC_PAIRS, rate=0.4, num_classes=10,
                     mapping=parse_mapping(CIFAR10_MAPPING_TEXT, 10), seed=5)
    res = inject_asymmetric_pairs(labels, spec)
    # Exactly floor(0.4 * 1000) samples per source class move to its target.
    for src, dst in [(9, 1), (2, 0), (4, 7), (3, 5), (5, 3)]:
        moved = np.count_nonzero((labels == src) & (res.observed_labels == dst))
        assert moved == 400
        kept = np.count_nonzero((labels == src) & (res.observed_labels == src))
        assert kept == 600
    # Non-source classes are untouched.
    for cls in (0, 1, 6, 7, 8):
        idx = labels == cls
        assert np.array_equal(res.observed_labels[idx], labels[idx])
    assert res.num_corrupted == 2000


def test_pair_flip_bidirectional_cat_dog():
    labels = balanced_labels(10, 500)
    spec = NoiseSpec(kind=KIND_ASYMMETRIC_PAIRS, rate=0.4, num_classes=10,
                     mapping=[(3, 5), (5, 3)], seed=21)
    res = inject_asymmetric_pairs(labels, spec)
    cat_to_dog = np.count_nonzero((labels == 3) & (res.observed_labels == 5))
    dog_to_cat = np.count_nonzero((labels == 5) & (res.observed_labels == 3))
    assert cat_to_dog == 200
    assert dog_to_cat == 200


def test_pair_flip_rate_zero_identity():
    labels = balanced_labels(10, 50)
    spec = NoiseSpec(kind=KIND_ASYMMETRIC_PAIRS, rate=0.0, num_classes=10,
                     mapping=parse_mapping(CIFAR10_MAPPING_TEXT, 10), seed=2)
    res = inject_asymmetric_pairs(labels, spec)
    assert np.array_equal(res.observed_labels, labels)


def test_pair_flip_mapping_validation():
    with pytest.raises(InvalidMappingError):
        NoiseSpec(kind=KIND_ASYMMETRIC_PAIRS, rate=0.2, num_classes=4,
                  mapping=[(1, 9)])
    with pytest.raises(InvalidMappingError):
        NoiseSpec(kind=KIND_ASYMMETRIC_PAIRS, rate=0.2, num_classes=4,
                  mapping=[(2, 2)])
    with pytest.raises(InvalidMappingError):
        NoiseSpec(kind=KIND_ASYMMETRIC_PAIRS, rate=0.2, num_classes=4,
                  mapping=[(1, 2), (1, 3)])


# -------------------------------------------------------------- circular


def test_circular_successor_wraps_within_block():
    # Blocks of five: {0..4}, {5..9}, ... Class 4 wraps to 0, class 7 to 8.
    assert circular_successor(4, 5) == 0
    assert circular_successor(7, 5) == 8
    assert circular_successor(0, 5) == 1
    assert circular_successor(99, 5) == 95


def test_circular_exact_counts():
    labels = balanced_labels(10, 100)
    spec = NoiseSpec(kind=KIND_ASYMMETRIC_CIRCULAR, rate=0.4, num_classes=10,
                     superclass_size=5, seed=17)
    res = inject_asymmetric_circular(labels, spec)
    for cls in range(10):
        succ = circular_successor(cls, 5)
        moved = np.count_nonzero((labels == cls) & (res.observed_labels == succ))
        assert moved == 40
    assert res.num_corrupted == 400


def test_circular_rate_zero_identity():
    labels = balanced_labels(10, 30)
    spec = NoiseSpec(kind=KIND_ASYMMETRIC_CIRCULAR, rate=0.0, num_classes=10,
                     superclass_size=5, seed=1)
    res = inject_asymmetric_circular(labels, spec)
    assert np.array_equal(res.observed_labels, labels)


def test_circular_divisibility_enforced():
    with pytest.raises(InvalidSuperclassError):
        NoiseSpec(kind=KIND_ASYMMETRIC_CIRCULAR, rate=0.2, num_classes=10,
                  superclass_size=3)
    with pytest.raises(InvalidSuperclassError):
        NoiseSpec(kind=KIND_ASYMMETRIC_CIRCULAR, rate=0.2, num_classes=10,
                  superclass_size=1)


# ----------------------------------------------------------- cross-kind


def test_mask_consistency_invariant():
    labels = balanced_labels(6, 80)
    specs = [
        NoiseSpec(kind=KIND_SYMMETRIC, rate=0.3, num_classes=6, seed=5),
        NoiseSpec(kind=KIND_ASYMMETRIC_PAIRS, rate=0.3, num_classes=6,
                  mapping=[(0, 1), (1, 0)], seed=5),
        NoiseSpec(kind=KIND_ASYMMETRIC_CIRCULAR, rate=0.3, num_classes=6,
                  superclass_size=3, seed=5),
    ]
    for spec in specs:
        res = inject(labels, spec)
        assert np.array_equal(res.corrupted_mask,
                              res.observed_labels != res.true_labels)
        assert np.array_equal(res.true_labels, labels)


def test_determinism_bit_identical():
    labels = balanced_labels(8, 64)
    spec = NoiseSpec(kind=KIND_SYMMETRIC, rate=0.25, num_classes=8, seed=99)
    a = inject(labels, spec)
    b = inject(labels, spec)
    assert np.array_equal(a.observed_labels, b.observed_labels)
    assert np.array_equal(a.corrupted_mask, b.corrupted_mask)


def test_per_class_streams_are_order_independent():
    # Dropping one source class from the mapping must not change what
    # happens to the remaining classes (independent per-class streams).
    labels = balanced_labels(6, 100)
    full = inject_asymmetric_pairs(
        labels, NoiseSpec(kind=KIND_ASYMMETRIC_PAIRS, rate=0.3, num_classes=6,
                          mapping=[(0, 1), (2, 3), (4, 5)], seed=31))
    partial = inject_asymmetric_pairs(
        labels, NoiseSpec(kind=KIND_ASYMMETRIC_PAIRS, rate=0.3, num_classes=6,
                          mapping=[(0, 1), (4, 5)], seed=31))
    zero_rows = labels == 0
    four_rows = labels == 4
    assert np.array_equal(full.observed_labels[zero_rows],
                          partial.observed_labels[zero_rows])
    assert np.array_equal(full.observed_labels[four_rows],
                          partial.observed_labels[four_rows])


def test_inject_dispatch_and_unknown_kind():
    labels = balanced_labels(4, 10)
    res = inject(labels, NoiseSpec(kind=KIND_SYMMETRIC, rate=0.5,
                                   num_classes=4, seed=0))
    assert res.num_corrupted == 20
    with pytest.raises(Exception):
        NoiseSpec(kind="bogus", rate=0.5, num_classes=4)


def test_labels_out_of_range_rejected():
    spec = NoiseSpec(kind=KIND_SYMMETRIC, rate=0.1, num_classes=3, seed=0)
    with pytest.raises(Exception):
        inject(np.array([0, 1, 5]), spec)
