"""Engine configuration: TOML file loading plus prompt template resolution.

Config path comes from ``SAGEKB_CONFIG``; the KB root from ``SAGEKB_ROOT``
(both overridable programmatically). ``--mock`` selects fixture providers.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import InvalidRequestError
from .providers import ProviderSet, build_live_providers, build_mock_providers


@dataclass
class EngineConfig:
    root: Path | None = None
    chunk_target_tokens: int = 512
    chunk_overlap_tokens: int = 64
    retrieval_k: int = 5
    graph_depth: int = 2
    max_triples_per_chunk: int = 10
    max_triples_per_query: int = 30
    context_char_budget: int = 12_000
    summary_cap_chars: int = 2_000
    report_n_queries: int = 3
    report_top_m: int = 5
    prompts_dir: Path | None = None
    mock: bool = False
    fixtures_dir: Path | None = None
    mock_embedding_dim: int = 64
    providers_raw: dict = field(default_factory=dict)

    def build_providers(self) -> ProviderSet:
        if self.mock:
            return build_mock_providers(self.fixtures_dir, dim=self.mock_embedding_dim)
        return build_live_providers(self.providers_raw)


def load_config(path: str | os.PathLike | None = None, *, mock: bool | None = None) -> EngineConfig:
    """Load engine config from a TOML file; missing file means defaults."""
    if path is None:
        path = os.environ.get("SAGEKB_CONFIG")
    raw: dict = {}
    if path:
        p = Path(path)
        if not p.exists():
            raise InvalidRequestError(f"config file {p} does not exist")
        with open(p, "rb") as f:
            raw = tomllib.load(f)
    engine = raw.get("engine", {})
    mock_section = raw.get("mock", {})
    config = EngineConfig(
        root=Path(engine["root"]) if "root" in engine else None,
        chunk_target_tokens=int(engine.get("chunk_target_tokens", 512)),
        chunk_overlap_tokens=int(engine.get("chunk_overlap_tokens", 64)),
        retrieval_k=int(engine.get("retrieval_k", 5)),
        graph_depth=int(engine.get("graph_depth", 2)),
        max_triples_per_chunk=int(engine.get("max_triples_per_chunk", 10)),
        max_triples_per_query=int(engine.get("max_triples_per_query", 30)),
        context_char_budget=int(engine.get("context_char_budget", 12_000)),
        summary_cap_chars=int(engine.get("summary_cap_chars", 2_000)),
        report_n_queries=int(engine.get("report_n_queries", 3)),
        report_top_m=int(engine.get("report_top_m", 5)),
        prompts_dir=Path(engine["prompts_dir"]) if "prompts_dir" in engine else None,
        mock=bool(mock_section.get("enabled", False)),
        fixtures_dir=Path(mock_section["fixtures_dir"]) if "fixtures_dir" in mock_section else None,
        mock_embedding_dim=int(mock_section.get("embedding_dim", 64)),
        providers_raw={k: v for k, v in raw.items() if k not in ("engine", "mock")},
    )
    if mock is not None:
        config.mock = mock
    if config.chunk_overlap_tokens >= config.chunk_target_tokens:
        raise InvalidRequestError("chunk overlap must be smaller than chunk target")
    return config


def load_prompt(name: str, prompts_dir: Path | None = None) -> str:
    """Resolve a prompt template: explicit dir (or SAGEKB_PROMPTS) first,
    then the packaged defaults. Templates use ``{placeholder}`` fields."""
    search_dirs = []
    if prompts_dir is not None:
        search_dirs.append(Path(prompts_dir))
    env_dir = os.environ.get("SAGEKB_PROMPTS")
    if env_dir:
        search_dirs.append(Path(env_dir))
    for d in search_dirs:
        candidate = d / f"{name}.txt"
        if candidate.exists():
            return candidate.read_text("utf-8")
    ref = resources.files("sagekb") / "prompts" / f"{name}.txt"
    return ref.read_text(encoding="utf-8")


def render_prompt(template: str, **fields: str) -> str:
    try:
        return template.format(**fields)
    except (KeyError, IndexError) as exc:
        raise InvalidRequestError(f"prompt template missing field: {exc}") from exc
