"""On-disk layout for teachers, students, and label spaces.

Model weights use the core checkpoint format; a JSON sidecar next to each
checkpoint records what the weights mean (label names, subset structure).
"""

from __future__ import annotations

import json
from pathlib import Path

from ..core.checkpoint import load_model, save_model
from ..data.labels import LabelSpace
from ..errors import CheckpointFormatError
from ..student import StudentModel
from ..teacher import TeacherModel


def space_to_dict(space: LabelSpace) -> dict:
    return {"labels": list(space.labels), "subsets": [list(s) for s in space.subsets]}


def space_from_dict(raw: dict) -> LabelSpace:
    return LabelSpace(tuple(raw["labels"]), tuple(tuple(s) for s in raw["subsets"]))


def save_teachers(teachers: list[TeacherModel], out_dir) -> list[str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for teacher in teachers:
        stem = out_dir / f"teacher_{teacher.subset_index}"
        save_model(teacher.model, stem.with_suffix(".bin"))
        sidecar = {
            "subset_index": teacher.subset_index,
            "space": space_to_dict(teacher.label_space),
        }
        stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))
        paths.append(str(stem.with_suffix(".bin")))
    return paths


def load_teachers(teachers_dir) -> tuple[list[TeacherModel], LabelSpace]:
    teachers_dir = Path(teachers_dir)
    bins = sorted(teachers_dir.glob("teacher_*.bin"))
    if not bins:
        raise CheckpointFormatError(f"no teacher checkpoints under {teachers_dir}")
    teachers = []
    space = None
    for path in bins:
        sidecar = json.loads(path.with_suffix(".json").read_text())
        space = space_from_dict(sidecar["space"])
        model = load_model(path)
        model.freeze()
        teachers.append(TeacherModel(model, int(sidecar["subset_index"]), space))
    teachers.sort(key=lambda t: t.subset_index)
    return teachers, space


def save_student(student: StudentModel, stem) -> str:
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    save_model(student.model, stem.with_suffix(".bin"))
    sidecar = {"space": space_to_dict(student.label_space)}
    stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))
    return str(stem.with_suffix(".bin"))


def load_student(path) -> StudentModel:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    return StudentModel(load_model(path), space_from_dict(sidecar["space"]))
