"""
Overpaid salary preset: the complement framing of ``underpaid_salary``,
where rows with feature 0 equal to 0 may have been overpaid by up to 10000.
"""

from label_multiplicity.certify.types import BiasRule, FeatureCondition, Interval, LabelKind
from label_multiplicity.tools.types import BiasProfile

_out_of_group = FeatureCondition(0, "==", 0.0)

bias_profile = BiasProfile(
    name="overpaid_salary",
    description="Salaries of rows with feature[0] == 0 may be up to 10000 too high",
    rules=[BiasRule((_out_of_group,), Interval(-10000.0, 0.0))],
    k=1.0,
    label_kind=LabelKind.REGRESSION,
    subgroups={"feature0_eq_0": [_out_of_group]},
)
