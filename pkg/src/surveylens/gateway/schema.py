"""Declarative output schemas for structured LLM replies.

A schema names the tool-call function and its fields; it can render
itself as JSON Schema for the wire request and validate a parsed payload
coming back.  Field kinds cover what the task layer needs: free strings,
closed-choice enums, lists of strings (optionally restricted to a
vocabulary), and lists of flat objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

KIND_STRING = "string"
KIND_ENUM = "enum"
KIND_STRING_LIST = "string_list"
KIND_OBJECT_LIST = "object_list"

_KINDS = (KIND_STRING, KIND_ENUM, KIND_STRING_LIST, KIND_OBJECT_LIST)


class SchemaError(ValueError):
    """The schema itself is malformed."""


class PayloadValidationError(ValueError):
    """A payload does not satisfy the schema."""


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: str = KIND_STRING
    required: bool = True
    # Closed vocabulary for enum fields, or the allowed items of a
    # string_list; None leaves string lists unrestricted.
    values: tuple[str, ...] | None = None
    item_fields: tuple["FieldSpec", ...] | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("field name must be non-empty")
        if self.kind not in _KINDS:
            raise SchemaError(f"field {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == KIND_ENUM and not self.values:
            raise SchemaError(f"enum field {self.name!r} needs a non-empty values tuple")
        if self.values is not None and len(set(self.values)) != len(self.values):
            raise SchemaError(f"field {self.name!r}: duplicate values")
        if self.kind == KIND_OBJECT_LIST:
            if not self.item_fields:
                raise SchemaError(f"object_list field {self.name!r} needs item_fields")
            if any(f.kind == KIND_OBJECT_LIST for f in self.item_fields):
                raise SchemaError(f"field {self.name!r}: object lists cannot nest")
        elif self.item_fields is not None:
            raise SchemaError(f"field {self.name!r}: item_fields only apply to object_list")

    def json_schema(self) -> dict[str, Any]:
        if self.kind == KIND_STRING:
            return {"type": "string"}
        if self.kind == KIND_ENUM:
            return {"type": "string", "enum": list(self.values or ())}
        if self.kind == KIND_STRING_LIST:
            items: dict[str, Any] = {"type": "string"}
            if self.values is not None:
                items["enum"] = list(self.values)
            return {"type": "array", "items": items}
        properties = {f.name: f.json_schema() for f in self.item_fields or ()}
        required = [f.name for f in self.item_fields or () if f.required]
        return {
            "type": "array",
            "items": {"type": "object", "properties": properties, "required": required},
        }

    def check(self, value: Any, where: str) -> None:
        if self.kind == KIND_STRING:
            if not isinstance(value, str):
                raise PayloadValidationError(f"{where}: expected a string")
        elif self.kind == KIND_ENUM:
            if value not in (self.values or ()):
                raise PayloadValidationError(
                    f"{where}: {value!r} is not one of {list(self.values or ())}"
                )
        elif self.kind == KIND_STRING_LIST:
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise PayloadValidationError(f"{where}: expected a list of strings")
            if self.values is not None:
                stray = [v for v in value if v not in self.values]
                if stray:
                    raise PayloadValidationError(
                        f"{where}: value(s) outside the allowed set: {stray}"
                    )
        else:
            if not isinstance(value, list) or not all(isinstance(v, dict) for v in value):
                raise PayloadValidationError(f"{where}: expected a list of objects")
            for index, item in enumerate(value):
                _check_object(item, self.item_fields or (), f"{where}[{index}]")


def _check_object(payload: Mapping[str, Any], fields: tuple[FieldSpec, ...], where: str) -> None:
    for spec in fields:
        if spec.name not in payload:
            if spec.required:
                raise PayloadValidationError(f"{where}: missing required field {spec.name!r}")
            continue
        spec.check(payload[spec.name], f"{where}.{spec.name}")


@dataclass(frozen=True)
class OutputSchema:
    name: str
    description: str = ""
    fields: tuple[FieldSpec, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("schema name must be non-empty")
        if not self.fields:
            raise SchemaError(f"schema {self.name!r} has no fields")
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise SchemaError(f"schema {self.name!r}: duplicate field names")

    def field_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def to_tool(self) -> dict[str, Any]:
        """Render as an OpenAI-style tool definition."""
        return {
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": {
                    "type": "object",
                    "properties": {f.name: f.json_schema() for f in self.fields},
                    "required": [f.name for f in self.fields if f.required],
                },
            },
        }

    def validate(self, payload: Any) -> None:
        """Raise PayloadValidationError unless payload satisfies the schema.

        Extra keys are tolerated; declared fields are checked strictly.
        """
        if not isinstance(payload, dict):
            raise PayloadValidationError(f"schema {self.name!r}: payload must be an object")
        _check_object(payload, self.fields, self.name)


def with_reasoning(name: str, *payload_fields: FieldSpec, description: str = "") -> OutputSchema:
    """Build a schema whose first field is the mandatory reasoning string."""
    reasoning = FieldSpec(
        "reasoning", KIND_STRING, required=True
    )
    return OutputSchema(name=name, description=description, fields=(reasoning, *payload_fields))
