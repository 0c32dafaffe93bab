"""
The set of attainable weight vectors is not convex, so a box can only
over-approximate it.
"""

import logging

import numpy as np

from label_multiplicity.certify.approx import theta_box_from_coefficients
from label_multiplicity.certify.oracle import describe_members, theta_membership


def test_two_members_whose_midpoint_is_not(nonconvex_example):
    cmap, y, spec = nonconvex_example
    np.testing.assert_allclose(cmap.c @ y, [1.0, 3.0, 1.0])

    first = np.array([4.0, 5.0, 2.0])
    second = np.array([3.0, 4.0, 3.0])
    midpoint = (first + second) / 2.0

    assert theta_membership(cmap, first, y, spec)
    assert theta_membership(cmap, second, y, spec)
    # Needs labels (1.5, -0.5, 3): three changes with k = 2.
    np.testing.assert_allclose(np.linalg.solve(cmap.c, midpoint), [1.5, -0.5, 3.0])
    assert not theta_membership(cmap, midpoint, y, spec)


def test_box_covers_the_gap(nonconvex_example):
    cmap, y, spec = nonconvex_example
    box = theta_box_from_coefficients(cmap, y, spec)
    for target in ([4.0, 5.0, 2.0], [3.0, 4.0, 3.0], [3.5, 4.5, 2.5]):
        assert box.coords.contains_point(target, tol=1e-12)


def test_candidate_points_are_logged(nonconvex_example, caplog):
    cmap, y, spec = nonconvex_example
    targets = [[4.0, 5.0, 2.0], [3.0, 6.0, 3.0]]
    with caplog.at_level(logging.INFO, logger="label_multiplicity.certify.oracle"):
        results = describe_members(cmap, targets, y, spec)
    assert results[0]
    # (3, 6, 3) is reported without an expectation; see docs/config-reference.md.
    assert len(results) == 2
    assert caplog.text.count("attainable") == 2
