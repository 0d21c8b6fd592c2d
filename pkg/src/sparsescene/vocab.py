"""Class and attribute vocabularies.

Class ids are contiguous from 1; id 0 is reserved for the special
"no class" label that marks unlabeled canvas. Aliases map spurious
detector names (e.g. "vehicle") onto their canonical class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


BACKGROUND = "background"
FOREGROUND = "foreground"

NO_CLASS_ID = 0


@dataclass(frozen=True)
class ClassDef:
    id: int
    name: str
    default_role: str  # "background" | "foreground"
    aliases: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"class id must be >= 1, got {self.id}")
        if self.default_role not in (BACKGROUND, FOREGROUND):
            raise ValueError(f"bad default_role {self.default_role!r}")


@dataclass(frozen=True)
class AttributeDef:
    id: int
    name: str


class ClassVocab:
    """Id- and name-indexed class table with alias resolution."""

    def __init__(self, classes: list[ClassDef]):
        ids = sorted(c.id for c in classes)
        if ids != list(range(1, len(classes) + 1)):
            raise ValueError("class ids must be unique and contiguous from 1")
        self.by_id: dict[int, ClassDef] = {c.id: c for c in classes}
        self.by_name: dict[str, ClassDef] = {}
        for c in classes:
            if c.name in self.by_name:
                raise ValueError(f"duplicate class name {c.name!r}")
            self.by_name[c.name] = c
        for c in classes:
            for alias in c.aliases:
                if alias in self.by_name and self.by_name[alias].id != c.id:
                    raise ValueError(f"alias {alias!r} collides with another class")
                self.by_name.setdefault(alias, c)

    def __len__(self) -> int:
        return len(self.by_id)

    def __contains__(self, name: str) -> bool:
        return name in self.by_name

    def resolve(self, name: str) -> ClassDef:
        try:
            return self.by_name[name]
        except KeyError:
            raise KeyError(f"unknown class {name!r}") from None

    @property
    def num_classes(self) -> int:
        """c in the embedding tables; tables hold c+1 rows (id 0 included)."""
        return len(self.by_id)

    @classmethod
    def from_json(cls, data) -> "ClassVocab":
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        return cls([
            ClassDef(
                id=int(rec["id"]),
                name=rec["name"],
                default_role=rec.get("default_role", BACKGROUND),
                aliases=frozenset(rec.get("aliases", [])),
            )
            for rec in data
        ])

    def to_json(self) -> list[dict]:
        return [
            {
                "id": c.id,
                "name": c.name,
                "default_role": c.default_role,
                "aliases": sorted(c.aliases),
            }
            for c in self.by_id.values()
        ]


class AttributeVocab:
    def __init__(self, attributes: list[AttributeDef]):
        if len({a.id for a in attributes}) != len(attributes):
            raise ValueError("attribute ids must be unique")
        self.by_id = {a.id: a for a in attributes}
        self.by_name = {a.name: a for a in attributes}
        if len(self.by_name) != len(attributes):
            raise ValueError("attribute names must be unique")

    def __len__(self) -> int:
        return len(self.by_id)

    def __contains__(self, name: str) -> bool:
        return name in self.by_name

    def resolve(self, name: str) -> AttributeDef:
        try:
            return self.by_name[name]
        except KeyError:
            raise KeyError(f"unknown attribute {name!r}") from None

    @classmethod
    def from_json(cls, data) -> "AttributeVocab":
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        return cls([AttributeDef(id=int(rec["id"]), name=rec["name"]) for rec in data])

    def to_json(self) -> list[dict]:
        return [{"id": a.id, "name": a.name} for a in self.by_id.values()]
