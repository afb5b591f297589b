import json
import logging
import sys
from pathlib import Path
from typing import Any

from esgame.games import strategy_game
from esgame.interactions import pair_key
from esgame.structures import check_map, make_structure
from esgame.types import (
    ConfigurationDomain,
    DocumentError,
    EsMap,
    EventStructure,
    InteractionResult,
    MapError,
    Polarity,
    PreStrategy,
    config_key,
    format_config,
)

logger = logging.getLogger(__name__)

DocumentValue = EventStructure | EsMap | PreStrategy

ESP_FIELDS = frozenset({"kind", "name", "events", "prec", "conflicts"})
EVENT_FIELDS = frozenset({"id", "pol"})
MAP_FIELDS = frozenset({"kind", "name", "source", "target", "pairs", "game_split"})
SPLIT_FIELDS = frozenset({"left", "right"})

POLARITIES = {"+": Polarity.POSITIVE, "-": Polarity.NEGATIVE, "−": Polarity.NEGATIVE}


def read_text(path: str | Path) -> str:
    """Read a document, with ``-`` meaning standard input."""
    if str(path) == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise DocumentError(f"Cannot read {path}: {err.strerror}") from err


def parse(path: str | Path) -> DocumentValue:
    """
    Load an esp, map or pre-strategy document.

    Relative ``source``/``target`` paths resolve against the document's
    directory.
    """
    base_dir = Path.cwd() if str(path) == "-" else Path(path).parent
    return parse_text(read_text(path), base_dir)


def parse_text(text: str, base_dir: Path | None = None) -> DocumentValue:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise DocumentError(err.msg, err.lineno, err.colno) from err
    return from_document(data, base_dir or Path.cwd())


def from_document(data: Any, base_dir: Path) -> DocumentValue:
    if not isinstance(data, dict):
        raise DocumentError("Document must be a JSON object")
    kind = data.get("kind")
    if kind == "esp":
        return _parse_esp(data)
    if kind in ("map", "prestrategy"):
        return _parse_map(data, base_dir)
    raise DocumentError(f"Unknown document kind: {kind!r}")


def _check_fields(
    data: dict, allowed: frozenset[str], required: set[str], where: str
) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise DocumentError(f"Unknown field {unknown[0]!r} in {where}")
    missing = sorted(required - set(data))
    if missing:
        raise DocumentError(f"Missing field {missing[0]!r} in {where}")


def _id_list(value: Any, where: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise DocumentError(f"Expected a list of event ids in {where}")
    return value


def _parse_esp(data: dict) -> EventStructure:
    _check_fields(data, ESP_FIELDS, {"kind", "events"}, "esp document")

    if not isinstance(data["events"], list):
        raise DocumentError("Expected a list in 'events'")
    ids: list[str] = []
    polarity: dict[str, Polarity] = {}
    for entry in data["events"]:
        if not isinstance(entry, dict):
            raise DocumentError("Expected an object in 'events'")
        _check_fields(entry, EVENT_FIELDS, {"id"}, "event")
        if not isinstance(entry["id"], str):
            raise DocumentError("Event id must be a string")
        ids.append(entry["id"])
        if "pol" in entry:
            if entry["pol"] not in POLARITIES:
                raise DocumentError(f"Unknown polarity {entry['pol']!r} of {entry['id']}")
            polarity[entry["id"]] = POLARITIES[entry["pol"]]

    if polarity and len(polarity) != len(ids):
        raise DocumentError("Either every event or no event carries a polarity")

    prec = data.get("prec", [])
    if not isinstance(prec, list):
        raise DocumentError("Expected a list in 'prec'")
    causes = []
    for edge in prec:
        pair = _id_list(edge, "'prec'")
        if len(pair) != 2:
            raise DocumentError("Causal edges are pairs of event ids")
        causes.append((pair[0], pair[1]))

    raw_conflicts = data.get("conflicts", [])
    if not isinstance(raw_conflicts, list):
        raise DocumentError("Expected a list in 'conflicts'")
    conflicts = [_id_list(g, "'conflicts'") for g in raw_conflicts]

    # An esp without events is the empty game.
    with_polarity = bool(polarity) or not ids
    return make_structure(ids, causes, conflicts, polarity if with_polarity else None)


def _structure_ref(value: Any, base_dir: Path, where: str) -> EventStructure:
    if isinstance(value, str):
        result = parse(base_dir / value)
    elif isinstance(value, dict):
        result = from_document(value, base_dir)
    else:
        raise DocumentError(f"Expected a path or an esp document in {where}")
    if not isinstance(result, EventStructure):
        raise DocumentError(f"Expected an esp document in {where}")
    return result


def _parse_map(data: dict, base_dir: Path) -> EsMap | PreStrategy:
    _check_fields(
        data, MAP_FIELDS, {"kind", "source", "target", "pairs"}, f"{data['kind']} document"
    )
    source = _structure_ref(data["source"], base_dir, "'source'")
    target = _structure_ref(data["target"], base_dir, "'target'")

    if not isinstance(data["pairs"], list):
        raise DocumentError("Expected a list in 'pairs'")
    mapping: dict[str, str] = {}
    for entry in data["pairs"]:
        pair = _id_list(entry, "'pairs'")
        if len(pair) != 2:
            raise DocumentError("Map entries are [source, target] pairs")
        if pair[0] in mapping:
            raise DocumentError(f"Event {pair[0]} is mapped twice")
        mapping[pair[0]] = pair[1]

    f = EsMap(source, target, mapping)
    verdict = check_map(f)
    if not verdict.is_map:
        raise MapError(f"Not a map: {verdict.reason}")
    if data["kind"] == "map":
        return f

    if verdict.kind != "polarity-preserving-map":
        raise MapError(f"Not a pre-strategy: {verdict}")

    left = right = None
    if "game_split" in data:
        split = data["game_split"]
        if not isinstance(split, dict):
            raise DocumentError("Expected an object in 'game_split'")
        _check_fields(split, SPLIT_FIELDS, set(SPLIT_FIELDS), "'game_split'")
        left = _structure_ref(split["left"], base_dir, "'game_split'")
        right = _structure_ref(split["right"], base_dir, "'game_split'")
        if strategy_game(left, right) != target:
            raise DocumentError("'game_split' does not describe the target game")

    return PreStrategy(f, left=left, right=right, name=data.get("name", ""))


# Serialization


def esp_document(E: EventStructure, name: str = "") -> dict[str, Any]:
    events: list[dict[str, str]] = []
    for e in sorted(E.events):
        entry = {"id": e}
        if E.polarity is not None:
            entry["pol"] = str(E.polarity[e])
        events.append(entry)
    return {
        "kind": "esp",
        "name": name,
        "events": events,
        "prec": [[a, b] for a, b in sorted(E.causes)],
        "conflicts": sorted(list(config_key(g)) for g in E.conflicts),
    }


def map_document(value: EsMap | PreStrategy, name: str = "") -> dict[str, Any]:
    f = value.labelling if isinstance(value, PreStrategy) else value
    document: dict[str, Any] = {
        "kind": "prestrategy" if isinstance(value, PreStrategy) else "map",
        "name": value.name if isinstance(value, PreStrategy) and not name else name,
        "source": esp_document(f.source),
        "target": esp_document(f.target),
        "pairs": [[s, t] for s, t in sorted(f.mapping.items())],
    }
    if isinstance(value, PreStrategy) and value.left is not None and value.right is not None:
        document["game_split"] = {
            "left": esp_document(value.left),
            "right": esp_document(value.right),
        }
    return document


def to_document(value: DocumentValue, name: str = "") -> dict[str, Any]:
    if isinstance(value, EventStructure):
        return esp_document(value, name)
    return map_document(value, name)


def serialize(value: DocumentValue, name: str = "") -> str:
    """Canonical JSON text of a value; equal values give equal bytes."""
    return json.dumps(to_document(value, name), indent=2, ensure_ascii=False) + "\n"


def write_text(text: str, path: str | Path) -> None:
    if str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


# DOT


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def _structure_lines(E: EventStructure, labels: dict[str, str]) -> list[str]:
    lines = []
    for e in sorted(E.events):
        label = labels.get(e, e)
        if E.polarity is not None:
            label = f"{label}{E.polarity[e]}"
        lines.append(f"  {_quote(e)} [label={_quote(label)}];")
    for a, b in sorted(E.causes):
        lines.append(f"  {_quote(a)} -> {_quote(b)};")
    for i, g in enumerate(sorted(E.conflicts, key=config_key)):
        members = sorted(g)
        if len(members) == 2:
            a, b = members
            lines.append(f"  {_quote(a)} -> {_quote(b)} [style=dashed, dir=none];")
            continue
        hub = _quote(f"#conflict{i}")
        lines.append(f"  {hub} [shape=point];")
        for e in members:
            lines.append(f"  {hub} -> {_quote(e)} [style=dashed, dir=none];")
    return lines


def _domain_lines(domain: ConfigurationDomain) -> list[str]:
    lines = []
    for i, x in enumerate(domain.configurations):
        lines.append(f"  {_quote(f'c{i}')} [label={_quote(format_config(x))}];")
    for i, j, e in domain.covers:
        lines.append(f"  {_quote(f'c{i}')} -> {_quote(f'c{j}')} [label={_quote(e)}];")
    return lines


def dot_export(
    value: EventStructure | PreStrategy | InteractionResult | ConfigurationDomain,
    name: str = "G",
) -> str:
    """
    Render a value as a DOT digraph.

    Causal links are solid arrows, binary conflicts dashed undirected edges
    and larger conflicts a point node joined to each member.
    """
    if isinstance(value, ConfigurationDomain):
        body = _domain_lines(value)
    elif isinstance(value, PreStrategy):
        labels = {s: f"{s} ↦ {a}" for s, a in value.labelling.mapping.items()}
        body = _structure_lines(value.inner, labels)
    elif isinstance(value, InteractionResult):
        labels = {p: f"{p}\n{pair_key([value.tops[p]])}" for p in value.structure.events}
        body = _structure_lines(value.structure, labels)
    else:
        body = _structure_lines(value, {})

    return "\n".join([f"digraph {_quote(name)} {{", *body, "}"]) + "\n"
