"""Suboracle synthesis from an explicit marked set.

The stage-k oracle reads only the low w(k) = n0 + (widths of stages 2..k)
bits and accepts exactly the stage-k prefixes of the marked items. The
simulator plays both oracle provider and searcher, so every oracle carries a
query counter as the honesty ledger: one query per operator application (not
per basis state), plus one per classical point evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .register import MarkedSet, SubgroupLayout, format_item, stage_prefix, validate


@dataclass(eq=False)
class Suboracle:
    """Predicate on low ``width`` bits accepting ``prefix_set``, with metering.

    ``k`` is the stage the oracle belongs to; 0 marks the global
    (full-register) oracle used by the baseline search.
    """

    k: int
    width: int
    prefix_set: frozenset[int]
    query_count: int = field(default=0, compare=False)

    def __post_init__(self):
        for v in self.prefix_set:
            if not 0 <= v < (1 << self.width):
                raise ValueError(f"accepted value {v} does not fit in {self.width} bits")

    def accepts(self, y: int) -> bool:
        """The bare predicate; reads the low ``width`` bits of y. No charge."""
        return (y & ((1 << self.width) - 1)) in self.prefix_set

    def evaluate(self, y: int) -> bool:
        """Classical point query; each call charges one oracle use."""
        self.charge_query()
        return self.accepts(y)

    def charge_query(self, count: int = 1) -> None:
        self.query_count += count

    def to_json_dict(self) -> dict:
        """Stable export form: {"k", "width", "accepted": [bitstrings]}."""
        return {
            "k": self.k,
            "width": self.width,
            "accepted": [format_item(v, self.width) for v in sorted(self.prefix_set)],
        }


def synthesize(marked: MarkedSet, layout: SubgroupLayout, k: int,
               unsafe: bool = False) -> Suboracle:
    """Build the stage-k oracle accepting the marked items' stage-k prefixes.

    Requires the distinct-prefix precondition unless ``unsafe`` is set; an
    unsafe oracle on a colliding set accepts fewer than M prefixes, which is
    the observable signature of the collision pathology.
    """
    report = validate(marked, layout)
    if not report.ok and not unsafe:
        raise ValidationError(
            "marked set fails validation; rerun in unsafe mode to force it",
            report=report,
        )
    width = layout.prefix_width(k)
    prefixes = frozenset(stage_prefix(item, layout, k) for item in marked.items)
    return Suboracle(k=k, width=width, prefix_set=prefixes)


def full_oracle(marked: MarkedSet) -> Suboracle:
    """The global oracle accepting exactly the marked items (baseline search)."""
    return Suboracle(k=0, width=marked.n, prefix_set=frozenset(marked.items))


def factorizability_check(marked: MarkedSet, layout: SubgroupLayout) -> bool:
    """True iff the marked set is the Cartesian product of its per-stage parts.

    Every item's parts lie in the per-stage projections, so the set is a
    subset of the product; with |product| equal to the number of distinct
    items the two coincide. A single item is always factorizable.
    """
    distinct = set(marked.items)
    product_size = 1
    for lo, width in layout.stage_ranges:
        parts = {(item >> lo) & ((1 << width) - 1) for item in distinct}
        product_size *= len(parts)
        if product_size > len(distinct):
            return False
    return product_size == len(distinct)
