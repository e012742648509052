"""Path-by-path comparison with the printed multi-path series.

Each printed term is ``coefficient * exp(i * (sum of mirror phases))``.
The printed labels give phase sums, not visiting order, so terms are
compared by the multiset of mirrors they pick up.
"""
from collections import Counter

import numpy as np
import pytest

from photonwalk.devices import unbiased_multiport_path_sum

Q, E, S = 0.25, 0.125, 0.0625
I = 1j


def _key(label):
    return "".join(sorted(label))


def computed_terms(n, dst, mirrors=3):
    ps = unbiased_multiport_path_sum(n, [0.0] * n, max_bounces=64, trace_mirrors=mirrors)
    return Counter((_key(t.label), complex(np.round(t.coefficient, 12))) for t in ps.terms_for(0, dst))


def printed(terms):
    return Counter((_key(label), complex(c)) for c, label in terms)


# 3-port, input A; labels are the printed phase sums
THREE_PORT = {
    0: [(Q, "C"), (Q, "B"), (-I * E, "BC"), (-I * E, "BC"), (S, "ABC"), (S, "ABC"),
        (-S, "BCB"), (-S, "CBC"), (-S, "BAB"), (-S, "CAC")],
    1: [(I / 2, ""), (-Q, "C"), (-I * E, "AB"), (I * E, "AC"), (I * E, "BC"), (S, "ABC"),
        (-S, "ABC"), (-S, "ABC"), (S, "CBC"), (S, "CAC")],
    2: [(I / 2, ""), (-Q, "B"), (I * E, "AB"), (-I * E, "AC"), (I * E, "BC"), (S, "ABC"),
        (-S, "ABC"), (-S, "ABC"), (S, "BCB"), (S, "BAB")],
}


@pytest.mark.parametrize("dst", [0, 1, 2])
def test_three_port_series_term_for_term(dst):
    assert computed_terms(3, dst) == printed(THREE_PORT[dst])


def test_four_port_leading_terms():
    lead = {dst: computed_terms(4, dst, mirrors=1) for dst in range(4)}
    assert lead[0] == printed([(Q, "B"), (Q, "D")])
    assert lead[1] == printed([(I / 2, "")])
    assert lead[2] == printed([(-Q, "B"), (-Q, "D")])
    assert lead[3] == printed([(I / 2, "")])


def test_four_port_a_to_b_through_two_mirrors():
    got = computed_terms(4, 1, mirrors=2)
    assert got == printed([(I / 2, ""), (-I * E, "DC"), (-I * E, "BA"), (I * E, "BC"), (I * E, "DA")])


def test_four_port_a_to_a_contains_printed_terms():
    got = computed_terms(4, 0)
    shown = printed([(Q, "B"), (Q, "D"), (-S, "BCB"), (S, "BCD"), (-S, "DCD"), (S, "DCB"), (-S, "BAB"), (-S, "DAD")])
    assert not shown - got
    # two further three-mirror paths through A and back, B-A-D and D-A-B
    assert got - shown == printed([(S, "BAD"), (S, "DAB")])


def test_four_port_a_to_c_three_mirror_terms():
    got = computed_terms(4, 2)
    expected = printed([
        (-Q, "B"), (-Q, "D"), (-S, "BCD"), (S, "BCB"), (S, "DCD"), (-S, "DCB"),
        (S, "BAB"), (S, "DAD"), (-S, "BAD"), (-S, "DAB"),
    ])
    assert got == expected


def test_four_port_a_to_d_two_mirror_terms():
    got = computed_terms(4, 3, mirrors=2)
    assert got == printed([(I / 2, ""), (-I * E, "BC"), (I * E, "DC"), (-I * E, "DA"), (I * E, "BA")])


def test_traced_terms_add_up_to_truncated_matrix():
    # a path with k mirror visits uses 2k + 1 internal segments
    rng = np.random.default_rng(5)
    for n in (3, 4):
        phi = rng.uniform(0, 2 * np.pi, n)
        ps = unbiased_multiport_path_sum(n, phi, max_bounces=64, trace_mirrors=4)
        for m in range(5):
            truncated = unbiased_multiport_path_sum(n, phi, max_bounces=2 * m + 1, trace_mirrors=-1).matrix
            for dst in range(n):
                total = sum(t.amplitude(phi) for t in ps.terms_for(0, dst) if len(t.mirrors) <= m)
                assert abs(total - truncated[dst, 0]) < 1e-14


def test_path_sum_mirror_count_is_bounded_by_segments():
    ps = unbiased_multiport_path_sum(4, [0.1, 0.2, 0.3, 0.4], max_bounces=3, trace_mirrors=10)
    assert all(len(t.mirrors) <= 2 for t in ps.terms)
