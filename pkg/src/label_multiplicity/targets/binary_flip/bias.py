"""
Binary flip preset: any training label may be wrong.

Up to 2% of the labels may have the opposite class; a −1 label can move
by ``[0, 2]`` and a +1 label by ``[−2, 0]``, so the only non-trivial
perturbation of a label is a flip.
"""

from label_multiplicity.certify.types import BiasRule, Interval, LabelKind
from label_multiplicity.tools.types import BiasProfile

bias_profile = BiasProfile(
    name="binary_flip",
    description="Up to 2% of binary labels flipped to the other class",
    rules=[
        BiasRule((), Interval(0.0, 2.0), label_condition=-1.0),
        BiasRule((), Interval(-2.0, 0.0), label_condition=1.0),
    ],
    k="2%",
    label_kind=LabelKind.BINARY,
)
