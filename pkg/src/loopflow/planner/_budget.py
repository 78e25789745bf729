import threading
import time
from typing import Optional


class CancelToken:
    """Cooperative cancellation flag checked once per node expansion."""

    def __init__(self):
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()


class SearchBudget:
    """
    Wall-clock and/or node-expansion budget for one solve.

    With `node_budget` set the budget is deterministic: wall-clock time is
    measured for reporting but never stops the search.

    Example:
        >>> budget = SearchBudget(node_budget=500)
        >>> budget.start()
        >>> while not budget.exhausted():
        ...     budget.tick()
    """

    def __init__(
        self,
        deadline_ms: Optional[float] = None,
        node_budget: Optional[int] = None,
        cancel: Optional[CancelToken] = None,
        parent: Optional["SearchBudget"] = None,
    ):
        self.deadline_ms = deadline_ms
        self.node_budget = node_budget
        self.cancel = cancel if cancel is not None else (parent.cancel if parent else None)
        self.parent = parent
        self.expansions = 0
        self._t0: Optional[float] = None

    @property
    def deterministic(self) -> bool:
        node = self
        while node is not None:
            if node.node_budget is not None:
                return True
            node = node.parent
        return False

    @property
    def started(self) -> bool:
        return self._t0 is not None

    def start(self) -> "SearchBudget":
        self._t0 = time.perf_counter()
        self.expansions = 0
        return self

    def elapsed_ms(self) -> float:
        if self._t0 is None:
            return 0.0
        return (time.perf_counter() - self._t0) * 1000.0

    def tick(self, count: int = 1) -> None:
        self.expansions += count
        if self.parent is not None:
            self.parent.tick(count)

    def exhausted(self) -> bool:
        if self.cancel is not None and self.cancel.cancelled:
            return True
        if self.node_budget is not None and self.expansions >= self.node_budget:
            return True
        if self.node_budget is None and self.deadline_ms is not None and self.elapsed_ms() >= self.deadline_ms:
            return True
        return self.parent.exhausted() if self.parent is not None else False

    def remaining_nodes(self) -> Optional[int]:
        own = None if self.node_budget is None else max(self.node_budget - self.expansions, 0)
        up = self.parent.remaining_nodes() if self.parent is not None else None
        if own is None:
            return up
        return own if up is None else min(own, up)

    def remaining_ms(self) -> Optional[float]:
        own = None if self.deadline_ms is None else max(self.deadline_ms - self.elapsed_ms(), 0.0)
        up = self.parent.remaining_ms() if self.parent is not None else None
        if own is None:
            return up
        return own if up is None else min(own, up)

    def slice(self, fraction: float, min_nodes: int = 50, min_ms: float = 5.0) -> "SearchBudget":
        """A child budget covering `fraction` of what is left here."""
        nodes = self.remaining_nodes()
        ms = self.remaining_ms()
        child = SearchBudget(
            deadline_ms=None if ms is None else max(ms * fraction, min_ms),
            node_budget=None if nodes is None else max(int(nodes * fraction), min_nodes),
            parent=self,
        )
        return child.start()
