"""Reports printed by the command-line tool, as JSON or as terminal tables.

JSON output keeps a fixed key order and rounds every float to 12 significant digits,
so that identical inputs give byte-identical output.
"""

import json
import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from terminaltables import AsciiTable

from mixcomp import decomposition as kidecomp
from mixcomp import ensembles, tolerance, utils
from mixcomp.utils import ConsistencyError, ValidationError

__all__ = ["AnalysisReport", "to_json", "summary", "render"]

log = logging.getLogger(__name__)

SANDWICH_ATOL = 1e-8
FORMATS = ("json", "table")


@dataclass
class AnalysisReport:
    """Information content of an ensemble.

    # Arguments
    dim: Dimension of the signal space.
    signals: Number of signals.
    S_rho: Von Neumann entropy of the average state.
    I_LH: Levitin-Holevo function.
    I_R: Optimal blind compression rate.
    shannon: Shannon entropy of the signal probabilities.
    defect_lower_bound: `max(0, I_R - shannon)`; a positive value proves that blind
        compression needs more qubits than compression knowing the signal sequence.
    blocks: One dict per block with `dJ`, `dK` and the spectrum `rhoK`.
    tol: Structural tolerance used.
    """

    dim: int
    signals: int
    S_rho: float
    I_LH: float
    I_R: float
    shannon: float
    defect_lower_bound: float
    blocks: List[dict]
    tol: float

    @classmethod
    def analyze(cls, ensemble, tol=None):
        tol = tolerance.get_tolerance(tol)
        decomposition = kidecomp.ki_decompose(ensemble, tol)
        reduced = kidecomp.strip(decomposition, ensemble)
        s_rho = ensembles.von_neumann_entropy(ensembles.total_state(ensemble))
        i_lh = ensembles.levitin_holevo(ensemble)
        i_r = ensembles.von_neumann_entropy(ensembles.total_state(reduced))
        if not i_lh - SANDWICH_ATOL <= i_r <= s_rho + SANDWICH_ATOL:
            raise ConsistencyError(
                f"I_R = {i_r:.12g} violates I_LH = {i_lh:.12g} <= I_R <= S = {s_rho:.12g}."
            )
        shannon = ensembles.shannon_entropy(ensemble.probs)
        if i_r > shannon:
            log.info(
                f"Blind rate I_R = {i_r:.6g} exceeds the source entropy H(p) = {shannon:.6g}."
            )
        return cls(
            dim=ensemble.dim,
            signals=ensemble.n_signals,
            S_rho=s_rho,
            I_LH=i_lh,
            I_R=i_r,
            shannon=shannon,
            defect_lower_bound=max(0.0, i_r - shannon),
            blocks=[
                {"dJ": b.dJ, "dK": b.dK, "rhoK": b.k_spectrum.tolist()}
                for b in decomposition.blocks
            ],
            tol=tol,
        )

    @property
    def block_dims(self):
        return sorted((b["dJ"], b["dK"]) for b in self.blocks)

    def get_config(self):
        return {
            "dim": self.dim,
            "signals": self.signals,
            "S_rho": self.S_rho,
            "I_LH": self.I_LH,
            "I_R": self.I_R,
            "shannon": self.shannon,
            "defect_lower_bound": self.defect_lower_bound,
            "blocks": self.blocks,
            "tol": self.tol,
        }


def _rounded(value):
    if isinstance(value, dict):
        return {k: _rounded(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    return utils.round_significant(value)


def to_json(config):
    return json.dumps(_rounded(config), indent=2)


def _format_number(x):
    if isinstance(x, (bool, np.bool_)):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.6f}"
    return x


class QuantityTable(AsciiTable):
    def __init__(self, table_data, title=None):
        super().__init__([[_format_number(v) for v in row] for row in table_data], title=title)
        self.inner_column_border = False
        self.inner_heading_row_border = False


class BlocksTable(AsciiTable):
    def __init__(self, table_data, title=None):
        super().__init__([[_format_number(v) for v in row] for row in table_data], title=title)
        self.inner_column_border = False
        self.justify_columns = {i: "left" if i == 0 else "right" for i in range(len(table_data[0]))}
        self.inner_heading_row_border = True


def _analysis_tables(report):
    quantities = [
        ["Dimension", report.dim],
        ["Signals", report.signals],
        ["S(rho) (qubits)", report.S_rho],
        ["Levitin-Holevo (qubits)", report.I_LH],
        ["I_R (qubits)", report.I_R],
        ["Shannon (bits)", report.shannon],
        ["Information defect >=", report.defect_lower_bound],
    ]
    blocks = [["Block", "dJ", "dK", "rho_K spectrum"]]
    for l, b in enumerate(report.blocks):
        blocks.append([l, b["dJ"], b["dK"], ", ".join(f"{x:.4f}" for x in b["rhoK"])])
    return [QuantityTable(quantities, title="ensemble"), BlocksTable(blocks, title="blocks")]


def _converse_tables(report):
    quantities = [
        ["Scheme", report.scheme],
        ["N", report.n_sites],
        ["Code dimension", report.code_dim],
        ["Rate (qubits)", report.rate],
        ["S(sigma) (qubits)", report.entropy],
        ["sum g / N", report.mean_g],
        ["S(sigma) - rate", report.bound],
        ["Passed", report.passed],
    ]
    sites = [["Site", "p_e", "g", "H(X|Y)", "Fano", "F", "1 - f"]]
    for s in report.sites:
        sites.append(
            [
                s.site,
                s.p_error,
                s.g,
                s.conditional_entropy,
                s.fano_ok,
                s.chain.average,
                s.chain.site_average,
            ]
        )
    return [QuantityTable(quantities, title="scheme"), BlocksTable(sites, title="sites")]


def summary(report, print_fn=None):
    """Prints a report as terminal tables.

    # Arguments
    report: An `AnalysisReport` or a `compression.ConverseReport`.
    print_fn: Print function to use. Defaults to `print`. You can set it to a custom
        function in order to capture the string summary.
    """
    if print_fn is None:
        print_fn = print
    if isinstance(report, AnalysisReport):
        tables = _analysis_tables(report)
    else:
        tables = _converse_tables(report)
    for table in tables:
        print_fn(table.table)


def render(report, fmt="json"):
    """The report as a string in format `"json"` or `"table"`."""
    if fmt == "json":
        return to_json(report.get_config())
    if fmt == "table":
        lines = []
        summary(report, print_fn=lines.append)
        return "\n".join(lines)
    raise ValidationError(f"Unknown format {fmt!r}, expected one of {FORMATS}.")
