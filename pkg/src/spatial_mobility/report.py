"""Flow summaries and the site-level net-flow graph of an assignment."""

from __future__ import annotations

from dataclasses import dataclass

from .instance import Instance, ValidationError, origins_for
from .model import AssignmentMatrix, FeasibilityReport, check_feasibility

MAX_CYCLE_SITES = 12


class InfeasibleSolutionError(ValidationError):
    def __init__(self, report: FeasibilityReport):
        self.report = report
        super().__init__("solution is infeasible:\n" + report.describe())


@dataclass(frozen=True)
class FlowRow:
    origin: int
    destination: int
    assigned_in: int


@dataclass(frozen=True)
class FlowSummary:
    site_names: tuple[str, ...]
    rows: tuple[FlowRow, ...]  # ascending destination, then origin

    @property
    def ns(self) -> int:
        return len(self.site_names)

    @property
    def outflow(self) -> dict[int, int]:
        out = {j: 0 for j in range(1, self.ns + 1)}
        for r in self.rows:
            out[r.origin] += r.assigned_in
        return out

    @property
    def inflow(self) -> dict[int, int]:
        inc = {k: 0 for k in range(1, self.ns + 1)}
        for r in self.rows:
            inc[r.destination] += r.assigned_in
        return inc

    def count(self, j: int, k: int) -> int:
        for r in self.rows:
            if (r.origin, r.destination) == (j, k):
                return r.assigned_in
        return 0


def flow_summary(instance: Instance, x: AssignmentMatrix) -> FlowSummary:
    report = check_feasibility(instance, x)
    if not report.feasible:
        raise InfeasibleSolutionError(report)
    rows = tuple(FlowRow(j, k, int(x.row(j, k).sum()))
                 for k in range(1, instance.ns + 1) for j in origins_for(instance.ns, k))
    return FlowSummary(instance.site_names, rows)


@dataclass(frozen=True)
class NetFlowGraph:
    site_names: tuple[str, ...]
    edges: tuple[tuple[int, int, int], ...]
    cycles: tuple[tuple[int, ...], ...] | None  # None when enumeration was refused

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(range(1, len(self.site_names) + 1))


def _simple_cycles(n: int, edges: list[tuple[int, int, int]]) -> list[tuple[int, ...]]:
    # each cycle is reported once, rotated to start at its smallest site
    succ: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
    for a, b, _ in edges:
        succ[a].append(b)
    for v in succ:
        succ[v].sort()
    cycles = []

    def walk(start: int, node: int, path: list[int], on_path: set[int]) -> None:
        for nxt in succ[node]:
            if nxt == start:
                cycles.append(tuple(path) + (start,))
            elif nxt > start and nxt not in on_path:
                on_path.add(nxt)
                path.append(nxt)
                walk(start, nxt, path, on_path)
                path.pop()
                on_path.discard(nxt)

    for s in range(1, n + 1):
        walk(s, s, [s], {s})
    return cycles


def net_flow_graph(summary: FlowSummary) -> NetFlowGraph:
    """Cancel opposite flows per site pair and list the simple cycles left.

    Cancellation is pairwise only; longer loops survive as cycles. Cycle
    enumeration is skipped (``cycles is None``) above 12 sites.
    """
    n = summary.ns
    edges = []
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            net = summary.count(a, b) - summary.count(b, a)
            if net > 0:
                edges.append((a, b, net))
            elif net < 0:
                edges.append((b, a, -net))
    edges.sort()
    cycles = tuple(_simple_cycles(n, edges)) if n <= MAX_CYCLE_SITES else None
    return NetFlowGraph(summary.site_names, tuple(edges), cycles)


def render_summary(summary: FlowSummary) -> str:
    names = summary.site_names
    table = [("origin", "destination", "assigned")]
    table += [(names[r.origin - 1], names[r.destination - 1], str(r.assigned_in)) for r in summary.rows]
    widths = [max(len(row[c]) for row in table) for c in range(3)]
    lines = ["  ".join([row[0].ljust(widths[0]), row[1].ljust(widths[1]), row[2].rjust(widths[2])]).rstrip()
             for row in table]
    lines.append("")
    sites = [("site", "in", "out")]
    inflow, outflow = summary.inflow, summary.outflow
    sites += [(names[s - 1], str(inflow[s]), str(outflow[s])) for s in range(1, summary.ns + 1)]
    widths = [max(len(row[c]) for row in sites) for c in range(3)]
    lines += ["  ".join([row[0].ljust(widths[0]), row[1].rjust(widths[1]), row[2].rjust(widths[2])])
              for row in sites]
    return "\n".join(lines) + "\n"


def render_graph(graph: NetFlowGraph) -> str:
    names = graph.site_names
    lines = [f"edge {names[a - 1]} {names[b - 1]} {c}" for a, b, c in graph.edges]
    if graph.cycles is None:
        lines.append(f"# cycle enumeration skipped: more than {MAX_CYCLE_SITES} sites")
    else:
        lines += ["cycle " + " ".join(names[v - 1] for v in cyc) for cyc in graph.cycles]
    return "\n".join(lines) + "\n" if lines else ""


def render_report(summary: FlowSummary, graph: NetFlowGraph) -> str:
    return render_summary(summary) + "\n" + render_graph(graph)
