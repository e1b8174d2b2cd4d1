"""Synchronous round-model runtime for CONGEST and Congested Clique programs.

A node program is executed in lock-step rounds.  In round ``t`` every node
may send; all round-``t`` messages are delivered together and handed to
``receive`` before round ``t + 1`` starts, so nothing is read in the round it
was sent.  A phase ends at the first silent round (or raises when the budget
is exhausted).  One word is one ``(node-id, distance)`` pair.

Several independent computations can share a phase as logical *streams*
(e.g. the repetitions of a cover, or BFS trees rooted at many sources).  The
bandwidth rule is then enforced per stream and the phase is charged
``max stream rounds + pipeline depth - 1``, where the pipeline depth is the
largest number of streams a single node sends on.
"""

from __future__ import annotations

import csv
import io
import zlib
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Protocol, Sequence

import numpy as np

from .graph import WeightedGraph


class Model(str, Enum):
    CONGEST = "CONGEST"
    CLIQUE = "CLIQUE"


class SimulationError(RuntimeError):
    pass


class BandwidthViolation(SimulationError):
    """A program exceeded the per-round bandwidth rule (an algorithm bug)."""


class BudgetExceeded(SimulationError):
    """A program was still sending after its round budget."""


class LoadViolation(SimulationError):
    """Lenzen routing was called with a node over its n-word load."""


@dataclass(frozen=True)
class SimConfig:
    model: Model = Model.CLIQUE
    word_bits: int | None = None
    seed: int = 0
    lenzen_rounds: int = 2
    record_messages: bool = False


@dataclass(frozen=True)
class Violation:
    phase: str
    round: int
    src: int
    dst: int
    kind: str
    detail: str = ""


class Multiplexed(dict):
    """Payload carrying one word for each of several streams (key = stream id)."""


@dataclass
class RoundLedger:
    phase_rounds: dict[str, int] = field(default_factory=dict)
    phase_words: dict[str, int] = field(default_factory=dict)
    phase_max_words: dict[str, int] = field(default_factory=dict)
    messages_sent: list[tuple[str, int, int, int, int]] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)

    @property
    def total_rounds(self) -> int:
        return sum(self.phase_rounds.values())

    @property
    def total_words(self) -> int:
        return sum(self.phase_words.values())

    def charge(self, label: str, rounds: int, words: int = 0, max_words: int = 0) -> None:
        self.phase_rounds[label] = self.phase_rounds.get(label, 0) + rounds
        self.phase_words[label] = self.phase_words.get(label, 0) + words
        self.phase_max_words[label] = max(self.phase_max_words.get(label, 0), max_words)

    def merge(self, other: "RoundLedger") -> None:
        for label, r in other.phase_rounds.items():
            self.charge(label, r, other.phase_words.get(label, 0), other.phase_max_words.get(label, 0))
        self.messages_sent.extend(other.messages_sent)
        self.violations.extend(other.violations)

    def rounds_matching(self, prefix: str) -> int:
        return sum(r for label, r in self.phase_rounds.items() if label.startswith(prefix))

    def messages_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phase", "round", "src", "dst", "words"])
        w.writerows(self.messages_sent)
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phase", "total_rounds", "max_words_per_pair"])
        for label, r in self.phase_rounds.items():
            w.writerow([label, r, self.phase_max_words.get(label, 0)])
        return buf.getvalue()


class NodeProgram(Protocol):
    """Per-node behaviour; the runtime owns the state objects."""

    def init(self, v: int) -> Any: ...

    def send(self, v: int, state: Any, t: int) -> Iterable[tuple]: ...

    def receive(self, v: int, state: Any, t: int, inbox: list[tuple[int, Any]]) -> Any: ...


@dataclass
class PhaseResult:
    states: list[Any]
    ledger: RoundLedger
    rounds: int
    stream_rounds: dict[int, int]


def _stable_hash(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


class Simulator:
    """Executes phases on ``n`` nodes and keeps the global round ledger."""

    def __init__(self, n: int, config: SimConfig | None = None, graph: WeightedGraph | None = None):
        self.n = n
        self.config = config or SimConfig()
        if self.config.model is Model.CONGEST and graph is None:
            raise SimulationError("CONGEST simulation needs the communication graph")
        self.graph = graph
        self.ledger = RoundLedger()

    @property
    def model(self) -> Model:
        return self.config.model

    def per_node_rng(self, node: int, phase: str) -> np.random.Generator:
        """Reproducible stream for ``(master seed, node, phase)``."""
        ss = np.random.SeedSequence(
            entropy=self.config.seed & ((1 << 64) - 1), spawn_key=(int(node), _stable_hash(phase))
        )
        return np.random.default_rng(ss)

    def _fail(self, delta: RoundLedger, exc: type[SimulationError], v: Violation) -> None:
        delta.violations.append(v)
        self.ledger.merge(delta)
        raise exc(f"{v.kind} in phase {v.phase!r} round {v.round}: {v.src}->{v.dst} {v.detail}")

    def run_phase(
        self, label: str, program: NodeProgram, budget: int, nodes: Sequence[int] | None = None
    ) -> PhaseResult:
        n = self.n
        congest = self.model is Model.CONGEST
        record = self.config.record_messages
        order = range(n) if nodes is None else sorted(nodes)
        states: list[Any] = [None] * n
        for v in order:
            states[v] = program.init(v)
        delta = RoundLedger()
        stream_rounds: dict[int, int] = {}
        node_streams: dict[int, set[int]] = defaultdict(set)
        words_total = 0
        max_pair_words = 0
        t = 0
        while True:
            t += 1
            inboxes: dict[int, list[tuple[int, Any]]] = defaultdict(list)
            pair_streams: dict[tuple[int, int], Any] = {}
            pair_words: dict[tuple[int, int], int] = {}
            round_streams: set[int] = set()
            any_sent = False
            for v in order:
                out = program.send(v, states[v], t)
                if not out:
                    continue
                if t > budget:
                    self._fail(delta, BudgetExceeded, Violation(label, t, v, -1, "budget-exceeded", f"budget {budget}"))
                any_sent = True
                sent_streams = node_streams[v]
                for msg in out:
                    dst, payload = msg[0], msg[1]
                    if dst == v or not 0 <= dst < n:
                        self._fail(delta, BandwidthViolation, Violation(label, t, v, dst, "bad-destination"))
                    if congest and not self.graph.has_edge(v, dst):
                        self._fail(delta, BandwidthViolation, Violation(label, t, v, dst, "non-edge"))
                    if isinstance(payload, Multiplexed):
                        streams = payload.keys()
                        words = len(payload)
                    else:
                        streams = (msg[2] if len(msg) > 2 else 0,)
                        words = 1
                    key = (v, dst)
                    prev = pair_streams.get(key)
                    if prev is None:
                        pair_streams[key] = streams
                        pair_words[key] = words
                    else:
                        # a second message on the same pair must use disjoint streams
                        merged = set(prev)
                        if not merged.isdisjoint(streams):
                            self._fail(delta, BandwidthViolation, Violation(label, t, v, dst, "over-capacity"))
                        merged.update(streams)
                        pair_streams[key] = merged
                        pair_words[key] += words
                    round_streams.update(streams)
                    sent_streams.update(streams)
                    words_total += words
                    inboxes[dst].append((v, payload))
            if not any_sent:
                t -= 1
                break
            for s in round_streams:
                stream_rounds[s] = t
            max_pair_words = max(max_pair_words, max(pair_words.values()))
            if record:
                delta.messages_sent.extend((label, t, s, d, w) for (s, d), w in sorted(pair_words.items()))
            for dst in sorted(inboxes):
                inbox = inboxes[dst]
                inbox.sort(key=lambda m: m[0])
                states[dst] = program.receive(dst, states[dst], t, inbox)
        depth = max((len(s) for s in node_streams.values()), default=1)
        charged = max(stream_rounds.values(), default=0)
        if len(stream_rounds) > 1:
            charged += depth - 1
        max_per_stream = 1 if words_total else 0
        delta.charge(label, charged, words_total, max_per_stream if len(stream_rounds) > 1 else max_pair_words)
        self.ledger.merge(delta)
        return PhaseResult(states, delta, charged, stream_rounds)

    def lenzen_route(
        self, label: str, messages: Sequence[tuple[int, int, Any] | tuple[int, int, Any, int]]
    ) -> tuple[dict[int, list[tuple[int, Any]]], RoundLedger]:
        """Deliver ``(src, dst, payload[, words])`` messages in constant rounds.

        Only the load precondition is checked: every node may be the source
        and the destination of at most ``n`` words.
        """
        if self.model is not Model.CLIQUE:
            raise SimulationError("Lenzen routing is a Congested Clique primitive")
        out_load: dict[int, int] = defaultdict(int)
        in_load: dict[int, int] = defaultdict(int)
        delivered: dict[int, list[tuple[int, Any]]] = defaultdict(list)
        for msg in messages:
            src, dst, payload = msg[0], msg[1], msg[2]
            words = msg[3] if len(msg) > 3 else 1
            out_load[src] += words
            in_load[dst] += words
            delivered[dst].append((src, payload))
        delta = RoundLedger()
        for node, load in sorted(out_load.items()):
            if load > self.n:
                self._fail(delta, LoadViolation, Violation(label, 0, node, -1, "load-violation", f"source of {load} words"))
        for node, load in sorted(in_load.items()):
            if load > self.n:
                self._fail(delta, LoadViolation, Violation(label, 0, -1, node, "load-violation", f"destination of {load} words"))
        words = sum(out_load.values())
        if self.config.record_messages:
            pairs: dict[tuple[int, int], int] = defaultdict(int)
            for msg in messages:
                pairs[(msg[0], msg[1])] += msg[3] if len(msg) > 3 else 1
            delta.messages_sent.extend((label, 0, s, d, w) for (s, d), w in sorted(pairs.items()))
        delta.charge(label, self.config.lenzen_rounds if messages else 0, words, 1 if words else 0)
        for inbox in delivered.values():
            inbox.sort(key=lambda m: m[0])
        self.ledger.merge(delta)
        return dict(delivered), delta
