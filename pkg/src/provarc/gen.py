"""Synthetic graph generator for desk-scale benchmarks.

Emits audit-log-flavored attribute strings: each record instantiates one
of a small set of templates, and consecutive records of the same template
share parameter values except for an occasional mutation.  Emission runs
template-by-template in bursts, which gives nearby records the high
similarity the attribute tree exploits; --shuffle destroys that ordering
(same multiset of strings, scrambled) for worst-case comparisons.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass

_WORDS = (
    "proc file socket exec read write conn open close spawn recv send stat "
    "mmap unlink fork bind listen accept chmod rename mount login session "
    "module policy audit service daemon worker cache index shard replica"
).split()

_PATH_PARTS = ("usr", "var", "etc", "opt", "srv", "tmp", "home", "lib", "bin",
               "log", "data", "spool", "run", "cache")


@dataclass(frozen=True)
class SynthConfig:
    records: int = 10_000
    template_count: int = 20
    mutation_rate: float = 0.05
    shuffle: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.records < 0 or self.template_count < 1:
            raise ValueError("records must be >= 0 and template_count >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be within [0, 1]")


class _Template:
    """A key=value skeleton with a few numeric parameter slots."""

    def __init__(self, rng: random.Random, index: int):
        fields = rng.sample(_WORDS, k=rng.randint(5, 8))
        path = "/" + "/".join(rng.sample(_PATH_PARTS, k=rng.randint(2, 4)))
        self.prefix = f"type={fields[0].upper()} unit={fields[1]}-{index:02d} path={path}"
        self.param_names = [f"{name}_id" for name in fields[2:]]
        self.param_digits = [rng.choice((4, 5, 6, 8)) for _ in self.param_names]
        self.values = [self._draw(rng, w) for w in self.param_digits]

    @staticmethod
    def _draw(rng: random.Random, width: int) -> str:
        return str(rng.randrange(10 ** (width - 1), 10 ** width))

    def emit(self, rng: random.Random, mutation_rate: float) -> str:
        for i, width in enumerate(self.param_digits):
            if rng.random() < mutation_rate:
                self.values[i] = self._draw(rng, width)
        params = " ".join(f"{name}={value}"
                          for name, value in zip(self.param_names, self.values))
        return f"{self.prefix} {params}"


def generate_attrs(config: SynthConfig, count: int, rng: random.Random) -> list[str]:
    """Attribute strings in burst order; shuffled afterwards if configured."""
    templates = [_Template(rng, i) for i in range(config.template_count)]
    attrs: list[str] = []
    while len(attrs) < count:
        template = rng.choice(templates)
        burst = rng.randint(4, 24)
        for _ in range(min(burst, count - len(attrs))):
            attrs.append(template.emit(rng, config.mutation_rate))
    if config.shuffle:
        rng.shuffle(attrs)
    return attrs


def generate(config: SynthConfig) -> str:
    """Render a complete input file: node lines first, then edge lines.

    Edge lines are emitted grouped by (src, dst), the way audit events
    cluster around one subject, so the stored edge-attribute order keeps
    the burst locality the attribute tree relies on.
    """
    rng = random.Random(config.seed)
    node_count = (config.records + 1) // 2
    edge_count = config.records - node_count

    node_attrs = generate_attrs(config, node_count, rng)
    edge_attrs = generate_attrs(config, edge_count, rng)

    endpoints: list[tuple[int, int]] = []
    for _ in range(edge_count):
        src = rng.randrange(node_count)
        endpoints.append((src, (src + 1 + rng.randrange(16)) % node_count))
    endpoints.sort()

    lines = [f"# synthetic graph: records={config.records} "
             f"templates={config.template_count} mutation={config.mutation_rate} "
             f"shuffle={config.shuffle} seed={config.seed}"]
    for i, attr in enumerate(node_attrs):
        lines.append(json.dumps({"type": "node", "id": i, "attr": attr},
                                separators=(",", ":")))
    for i, ((src, dst), attr) in enumerate(zip(endpoints, edge_attrs)):
        lines.append(json.dumps({"type": "edge", "id": i, "src": src, "dst": dst,
                                 "attr": attr}, separators=(",", ":")))
    return "\n".join(lines) + "\n"
