"""
Printed tableaux of the symplectic csRKN families, used as regression targets.

Each entry gives a_bar as a function of the family parameters and the b_bar
column, which does not depend on them. Entries marked "dirkn" are the
diagonally implicit two-parameter families obtained by eliminating gamma from
the order-2 family; they are regenerated through the structure solver rather
than by direct discretization.

The 3-point Gauss order-5 tableau is printed with 60 beta in entries (1,1) and
(3,3); the discretization gives b_1 P_2(c_1)^2 = 2/9 there, so 30 beta is used.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

s3 = math.sqrt(3.0)
s5 = math.sqrt(5.0)
s6 = math.sqrt(6.0)
s10 = math.sqrt(10.0)
s15 = math.sqrt(15.0)

Matrix = List[List[float]]
SAMPLE_VALUES = (0.0, 1.0, -1.0)


@dataclass(frozen=True)
class GoldenTableau:
    """
    One printed tableau.

    kind is "family" (discretize the family member directly) or "dirkn"
    (solve for a diagonally implicit member, then specialize).
    """
    case: str
    order: int
    rule: str
    varied: Tuple[str, ...]
    a_bar: Callable[..., Matrix]
    b_bar: Tuple[float, ...]
    kind: str = "family"

    def expected(self, values: Dict[str, float]) -> Matrix:
        return self.a_bar(*(values.get(name, 0.0) for name in ("alpha", "beta", "gamma")))


@dataclass(frozen=True)
class GoldenSolution:
    """Parameter values of a solved explicit or diagonally implicit member."""
    case: str
    order: int
    rule: str
    target: str
    values: Dict[str, float]


# order-2 family

def _order2_gauss1(a, b, g):
    return [[a]]


def _order2_radau_left2(a, b, g):
    return [[a / 4 - s3 / 2 * b + 1 / 8, 3 / 4 * a - s3 / 2 * b - 1 / 8],
            [a / 4 - s3 / 6 * b + 1 / 8, 3 / 4 * a + s3 / 2 * b - 1 / 8]]


def _order2_radau_right2(a, b, g):
    return [[3 / 4 * a - s3 / 2 * b + 1 / 8, a / 4 + s3 / 6 * b - 1 / 8],
            [3 / 4 * a + s3 / 2 * b + 1 / 8, a / 4 + s3 / 2 * b - 1 / 8]]


def _order2_lobatto2(a, b, g):
    return [[a / 2 - s3 * b + 1 / 4, a / 2 - 1 / 4],
            [a / 2 + 1 / 4, a / 2 + s3 * b - 1 / 4]]


# order-3 family

def _order3_gauss2(a, b, g):
    return [[(1 + s3) / 12 - a + b / 2, (1 - s3) / 12 - b / 2],
            [(1 + s3) / 12 - b / 2, (1 - s3) / 12 + a + b / 2]]


def _order3_radau_left2(a, b, g):
    return [[(2 - 6 * s3 * a + 9 * b) / 12, -s3 / 2 * a - 3 / 4 * b],
            [(2 - 2 * s3 * a - 3 * b) / 12, s3 / 2 * a + b / 4]]


def _order3_radau_right2(a, b, g):
    return [[(1 - 2 * s3 * a + b) / 4, (-1 + 2 * s3 * a - 3 * b) / 12],
            [(1 + 2 * s3 * a - 3 * b) / 4, (-1 + 6 * s3 * a + 9 * b) / 12]]


def _order3_lobatto3(a, b, g):
    return [[(6 - 18 * s3 * a + 27 * b) / 54, (1 - 6 * s3 * a) / 9, -1 / 18 - b / 2],
            [1 / 9 - s3 / 6 * a, 1 / 9, -1 / 18 + s3 / 6 * a],
            [1 / 9 - b / 2, (1 + 6 * s3 * a) / 9, (-1 + 6 * s3 * a + 9 * b) / 18]]


# order-4 family

def _order4_gauss2(a, b, g):
    return [[1 / 12 + a / 2, (1 - s3) / 12 - a / 2],
            [(1 + s3) / 12 - a / 2, 1 / 12 + a / 2]]


def _order4_radau_left3(a, b, g):
    return [[(1 + 18 * a) / 54,
             (-11 + 4 * s6 + (-36 + 54 * s6) * a) / 216,
             (-11 - 4 * s6 + (-36 - 54 * s6) * a) / 216],
            [(28 - 3 * s6) / 540 + (-15 + 15 * s6) * a / 225,
             (16 + s6) / 216 + (12 - 3 * s6) * a / 36,
             (98 - 53 * s6) / 1080 + (-240 + 15 * s6) * a / 900],
            [(28 + 3 * s6) / 540 + (-15 - 15 * s6) * a / 225,
             (98 + 53 * s6) / 1080 - (240 + 15 * s6) * a / 900,
             (16 - s6) / 216 + (12 + 3 * s6) * a / 36]]


def _order4_radau_right3(a, b, g):
    return [[(16 - s6) / 216 + (12 + 3 * s6) * a / 36,
             (62 - 43 * s6) / 1080 - (240 + 15 * s6) * a / 900,
             -(8 + 3 * s6) / 540 - (15 + 15 * s6) * a / 225],
            [(62 + 43 * s6) / 1080 - (240 - 15 * s6) * a / 900,
             (16 + s6) / 216 + (12 - 3 * s6) * a / 36,
             -(8 - 3 * s6) / 540 - (15 - 15 * s6) * a / 225],
            [(43 + 2 * s6) / 216 - (6 + 9 * s6) * a / 36,
             (43 - 2 * s6) / 216 - (6 - 9 * s6) * a / 36,
             (1 + 18 * a) / 54]]


def _order4_lobatto3(a, b, g):
    return [[(1 + 18 * a + 12 * s5 * b) / 36, (-1 + 6 * s5 * b) / 18, (-2 - 18 * a + 12 * s5 * b) / 36],
            [(5 + 6 * s5 * b) / 72, (1 - 6 * s5 * b) / 9, (-1 + 6 * s5 * b) / 72],
            [(2 - 9 * a + 6 * s5 * b) / 18, (5 + 6 * s5 * b) / 18, (1 + 18 * a + 12 * s5 * b) / 36]]


# order-5 family

def _order5_gauss3(a, b, g):
    return [[(2 - 90 * a + 30 * b) / 135,
             (19 - 6 * s15 + 180 * a - 120 * b) / 270,
             (62 - 15 * s15 + 120 * b) / 540],
            [(19 + 6 * s15 + 180 * a - 120 * b) / 432,
             (1 + 15 * b) / 27,
             (19 - 6 * s15 - 180 * a - 120 * b) / 432],
            [(62 + 15 * s15 + 120 * b) / 540,
             (19 + 6 * s15 - 180 * a - 120 * b) / 270,
             (2 + 90 * a + 30 * b) / 135]]


def _order5_radau_left3(a, b, g):
    return [[(1 - 60 * s15 * a) / 270,
             (-4 - 19 * s6 + (240 * s15 - 180 * s10) * a) / 2160,
             (-4 + 19 * s6 + (240 * s15 + 180 * s10) * a) / 2160],
            [(181 - 36 * s6 + (84 * s15 - 72 * s10) * a) / 2700,
             (17 + 2 * s6 + 60 * s15 * a) / 540,
             (301 - 136 * s6 - (384 * s15 - 72 * s10) * a) / 2700],
            [(181 + 36 * s6 + (84 * s15 + 72 * s10) * a) / 2700,
             (301 + 136 * s6 - (384 * s15 + 72 * s10) * a) / 2700,
             (17 - 2 * s6 + 60 * s15 * a) / 540]]


def _order5_radau_right3(a, b, g):
    return [[(17 - 2 * s6 - 60 * s15 * a) / 540,
             (211 - 104 * s6 + (384 * s15 + 72 * s10) * a) / 2700,
             (1 + 6 * s6 - (84 * s15 + 72 * s10) * a) / 2700],
            [(211 + 104 * s6 + (384 * s15 - 72 * s10) * a) / 2700,
             (17 + 2 * s6 - 60 * s15 * a) / 540,
             (1 - 6 * s6 - (84 * s15 - 72 * s10) * a) / 2700],
            [(536 + 79 * s6 - (240 * s15 + 180 * s10) * a) / 2160,
             (536 - 79 * s6 - (240 * s15 - 180 * s10) * a) / 2160,
             (1 + 60 * s15 * a) / 270]]


def _order5_lobatto4(a, b, g):
    return [[(1 - 60 * s15 * a + 150 * b) / 360,
             (-5 - 3 * s5 - (300 * s3 - 60 * s15) * a - 300 * b) / 720,
             (-5 + 3 * s5 + (300 * s3 + 60 * s15) * a - 300 * b) / 720,
             (2 + 75 * b) / 180],
            [29 / 720 - (11 * s5 + (100 * s3 - 20 * s15) * a + 100 * b) / 1200,
             (11 + 60 * s3 * a + 30 * b) / 360,
             (29 - 15 * s5 + 30 * b) / 360,
             -1 / 720 + (s5 - (20 * s15 + 100 * s3) * a - 100 * b) / 1200],
            [29 / 720 + (11 * s5 + (100 * s3 + 20 * s15) * a - 100 * b) / 1200,
             (29 + 15 * s5 + 30 * b) / 360,
             (11 - 60 * s3 * a + 30 * b) / 360,
             -1 / 720 - (s5 + (20 * s15 - 100 * s3) * a + 100 * b) / 1200],
            [(17 + 75 * b) / 180,
             (145 + 33 * s5 - (60 * s15 + 300 * s3) * a - 300 * b) / 720,
             (145 - 33 * s5 - (60 * s15 - 300 * s3) * a - 300 * b) / 720,
             (1 + 60 * s15 * a + 150 * b) / 360]]


# order-2 family with the gamma coefficient

def _gamma_radau_left2(a, b, g):
    return [[1 / 8 + a / 4 - s3 / 2 * b + 3 / 4 * g, -1 / 8 + 3 / 4 * a - s3 / 2 * b - 3 / 4 * g],
            [1 / 8 + a / 4 - s3 / 6 * b - g / 4, -1 / 8 + 3 / 4 * a + s3 / 2 * b + g / 4]]


def _gamma_radau_right2(a, b, g):
    return [[1 / 8 + 3 / 4 * a - s3 / 2 * b + g / 4, -1 / 8 + a / 4 + s3 / 6 * b - g / 4],
            [1 / 8 + 3 / 4 * a + s3 / 2 * b - 3 / 4 * g, -1 / 8 + a / 4 + s3 / 2 * b + 3 / 4 * g]]


def _gamma_lobatto2(a, b, g):
    return [[1 / 4 + a / 2 - s3 * b + 3 * g / 2, -1 / 4 + a / 2 - 3 * g / 2],
            [1 / 4 + a / 2 - 3 * g / 2, -1 / 4 + a / 2 + s3 * b + 3 * g / 2]]


# diagonally implicit members with gamma eliminated

def _dirkn_radau_left2(a, b, g):
    return [[a - s3 * b, 0.0],
            [1 / 6, -1 / 6 + a + s3 / 3 * b]]


def _dirkn_radau_right2(a, b, g):
    return [[a - s3 / 3 * b, 0.0],
            [1 / 2, -1 / 2 + a + s3 * b]]


def _dirkn_lobatto2(a, b, g):
    return [[a - s3 * b, 0.0],
            [1 / 2, -1 / 2 + a + s3 * b]]


AB = ("alpha", "beta")
A_ONLY = ("alpha",)
ABG = ("alpha", "beta", "gamma")

GAUSS1_BBAR = (1 / 2,)
GAUSS2_BBAR = (1 / 4 + s3 / 12, 1 / 4 - s3 / 12)
GAUSS3_BBAR = ((5 + s15) / 36, 2 / 9, (5 - s15) / 36)
RADAU_LEFT2_BBAR = (1 / 4, 1 / 4)
RADAU_RIGHT2_BBAR = (1 / 2, 0.0)
LOBATTO2_BBAR = (1 / 2, 0.0)
LOBATTO3_BBAR = (1 / 6, 1 / 3, 0.0)
RADAU_LEFT3_BBAR = (1 / 9, (7 + 2 * s6) / 36, (7 - 2 * s6) / 36)
RADAU_RIGHT3_BBAR = ((9 + s6) / 36, (9 - s6) / 36, 0.0)
LOBATTO4_BBAR = (1 / 12, (5 + s5) / 24, (5 - s5) / 24, 0.0)

GOLDEN_TABLEAUX: Tuple[GoldenTableau, ...] = (
    GoldenTableau("order-2/gauss:1", 2, "gauss:1", AB, _order2_gauss1, GAUSS1_BBAR),
    GoldenTableau("order-2/radau-left:2", 2, "radau-left:2", AB, _order2_radau_left2, RADAU_LEFT2_BBAR),
    GoldenTableau("order-2/radau-right:2", 2, "radau-right:2", AB, _order2_radau_right2, RADAU_RIGHT2_BBAR),
    GoldenTableau("order-2/lobatto:2", 2, "lobatto:2", AB, _order2_lobatto2, LOBATTO2_BBAR),
    GoldenTableau("order-3/gauss:2", 3, "gauss:2", AB, _order3_gauss2, GAUSS2_BBAR),
    GoldenTableau("order-3/radau-left:2", 3, "radau-left:2", AB, _order3_radau_left2, RADAU_LEFT2_BBAR),
    GoldenTableau("order-3/radau-right:2", 3, "radau-right:2", AB, _order3_radau_right2, RADAU_RIGHT2_BBAR),
    GoldenTableau("order-3/lobatto:3", 3, "lobatto:3", AB, _order3_lobatto3, LOBATTO3_BBAR),
    GoldenTableau("order-4/gauss:2", 4, "gauss:2", AB, _order4_gauss2, GAUSS2_BBAR),
    GoldenTableau("order-4/radau-left:3", 4, "radau-left:3", A_ONLY, _order4_radau_left3, RADAU_LEFT3_BBAR),
    GoldenTableau("order-4/radau-right:3", 4, "radau-right:3", A_ONLY, _order4_radau_right3, RADAU_RIGHT3_BBAR),
    GoldenTableau("order-4/lobatto:3", 4, "lobatto:3", AB, _order4_lobatto3, LOBATTO3_BBAR),
    GoldenTableau("order-5/gauss:3", 5, "gauss:3", AB, _order5_gauss3, GAUSS3_BBAR),
    GoldenTableau("order-5/radau-left:3", 5, "radau-left:3", A_ONLY, _order5_radau_left3, RADAU_LEFT3_BBAR),
    GoldenTableau("order-5/radau-right:3", 5, "radau-right:3", A_ONLY, _order5_radau_right3, RADAU_RIGHT3_BBAR),
    GoldenTableau("order-5/lobatto:4", 5, "lobatto:4", AB, _order5_lobatto4, LOBATTO4_BBAR),
    GoldenTableau("gamma/radau-left:2", 2, "radau-left:2", ABG, _gamma_radau_left2, RADAU_LEFT2_BBAR),
    GoldenTableau("gamma/radau-right:2", 2, "radau-right:2", ABG, _gamma_radau_right2, RADAU_RIGHT2_BBAR),
    GoldenTableau("gamma/lobatto:2", 2, "lobatto:2", ABG, _gamma_lobatto2, LOBATTO2_BBAR),
    GoldenTableau("dirkn/radau-left:2", 2, "radau-left:2", AB, _dirkn_radau_left2, RADAU_LEFT2_BBAR, "dirkn"),
    GoldenTableau("dirkn/radau-right:2", 2, "radau-right:2", AB, _dirkn_radau_right2, RADAU_RIGHT2_BBAR, "dirkn"),
    GoldenTableau("dirkn/lobatto:2", 2, "lobatto:2", AB, _dirkn_lobatto2, LOBATTO2_BBAR, "dirkn"),
)

GOLDEN_SOLUTIONS: Tuple[GoldenSolution, ...] = (
    GoldenSolution("explicit/radau-left:2", 2, "radau-left:2", "explicit",
                   {"alpha": 1 / 8, "beta": s3 / 24, "gamma": -1 / 8}),
    GoldenSolution("explicit/radau-right:2", 2, "radau-right:2", "explicit",
                   {"alpha": 1 / 8, "beta": s3 / 8, "gamma": -1 / 8}),
    GoldenSolution("explicit/lobatto:2", 2, "lobatto:2", "explicit",
                   {"alpha": 1 / 4, "beta": s3 / 12, "gamma": -1 / 12}),
    GoldenSolution("dirkn/lobatto:3/order-4", 4, "lobatto:3", "diagonally-implicit",
                   {"alpha": 0.0, "beta": s5 / 30}),
)


def parameter_samples(varied: Sequence[str], values: Sequence[float] = SAMPLE_VALUES) -> List[Dict[str, float]]:
    """Every combination of the sample values over the varied parameters."""
    samples: List[Dict[str, float]] = [{}]
    for name in varied:
        samples = [{**sample, name: v} for sample in samples for v in values]
    return samples


def golden_case(case: str) -> GoldenTableau:
    for entry in GOLDEN_TABLEAUX:
        if entry.case == case:
            return entry
    raise KeyError(f"no golden tableau named {case!r}")
