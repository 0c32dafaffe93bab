"""
Underpaid salary preset: every member of the group flagged by feature 0
may have been underpaid by up to 10000.
"""

from label_multiplicity.certify.types import BiasRule, FeatureCondition, Interval, LabelKind
from label_multiplicity.tools.types import BiasProfile

_in_group = FeatureCondition(0, "==", 1.0)

bias_profile = BiasProfile(
    name="underpaid_salary",
    description="Salaries of rows with feature[0] == 1 may be up to 10000 too low",
    rules=[BiasRule((_in_group,), Interval(0.0, 10000.0))],
    k=1.0,
    label_kind=LabelKind.REGRESSION,
    subgroups={"feature0_eq_1": [_in_group]},
)
