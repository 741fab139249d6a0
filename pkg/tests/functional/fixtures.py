"""Pairs shared by the functional suites, keyed by the branch they dispatch to."""
from nlperspective.envelopes import berhu, huber
from nlperspective.families import (
    Affine,
    ClippedQuadraticScaling,
    MaxZeroAffine,
    NormPowerShifted,
    PowerScaling,
    ScaledNorm,
    ScalingBelow,
)
from nlperspective.funcs import FuncHandle, GridSpec
from nlperspective.perspective import Branch


def clipped(beta=0.5):
    return FuncHandle(ClippedQuadraticScaling(beta=beta), 1, name="clipped")


def power(q, below=ScalingBelow.pos_inf):
    return FuncHandle(PowerScaling(q=q, below=below), 1, name=f"y^{q}")


def shifted_square(shift=0.5, dim=1):
    return FuncHandle(NormPowerShifted(p=2.0, shift=shift), dim, name="shifted_square")


def classical_pair():
    return shifted_square(0.0), FuncHandle(Affine(w=[1.0]), 1, name="y")


def example_pairs():
    """The Huber family of the worked example under the clipped scaling."""
    return {
        "huber": (huber(), clipped()),
        "berhu": (berhu(), clipped()),
        "shifted_square": (shifted_square(), clipped()),
    }


def analytic_pairs():
    """name -> (phi, s, branch it dispatches to)."""
    half = shifted_square(0.0)
    return {
        "convex_huber": (huber(), clipped(), Branch.convex_scaling),
        "berhu": (berhu(), clipped(), Branch.neg_down_scaled),
        "shifted_clipped": (shifted_square(), clipped(), Branch.star_pair_max),
        "shifted_root": (shifted_square(), power(0.5), Branch.star_pair_max),
        "shifted_square": (shifted_square(), power(2.0), Branch.lower_star_scaled),
        "concave_mobility": (half, power(0.5, ScalingBelow.neg_inf), Branch.concave_scaling),
        "classical": classical_pair() + (Branch.affine_scaling,),
        "positive_part": (half, FuncHandle(MaxZeroAffine(), 1), Branch.neg_down_scaled),
        "norm": (FuncHandle(ScaledNorm(), 1), clipped(), Branch.homogeneous),
    }


EXAMPLE_WINDOW = GridSpec(lower=[-1.0, 1.2], upper=[1.0, 2.2], counts=[2, 2])


def example_joint(nodes):
    return GridSpec.box([-3.0, -1.5], [3.0, 3.0], nodes)


def example_dual(nodes):
    return GridSpec.box([-4.0, -4.0], [4.0, 4.0], nodes)
