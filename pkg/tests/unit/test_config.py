import json
import unittest

import pytest

from nlperspective.config import (
    Command,
    FamilySpec,
    load_job,
    load_preset,
    parse_job,
    preset_names,
)
from nlperspective.exceptions import ConfigParse
from nlperspective.families import Huber


def classical_document(**extra):
    data = {
        "command": "eval",
        "pairs": [
            {
                "name": "classical",
                "phi": {"family": "norm_power_shifted", "params": {"p": 2.0}},
                "s": {"family": "affine", "params": {"w": [1.0]}},
            }
        ],
    }
    data.update(extra)
    return data


class TestParseJob(unittest.TestCase):
    def test_defaults(self):
        job = parse_job(classical_document())
        self.assertEqual(job.command, Command.eval)
        self.assertEqual(job.tolerance, 8e-2)
        self.assertEqual(job.margin, 0.2)
        phi, s = job.build_pair(job.pairs[0])
        self.assertEqual(phi.name, "norm_power_shifted")
        self.assertTrue(s.family.is_affine)

    def test_rejects_bad_tolerance_and_margin(self):
        with self.assertRaises(ConfigParse):
            parse_job(classical_document(tolerance=0.0))
        with self.assertRaises(ConfigParse):
            parse_job(classical_document(margin=-0.1))

    def test_rejects_unknown_command(self):
        with self.assertRaises(ConfigParse):
            parse_job(classical_document(command="plot"))

    def test_overridden(self):
        job = parse_job(classical_document())
        changed = job.overridden(tolerance=0.5, margin=None)
        self.assertEqual(changed.tolerance, 0.5)
        self.assertEqual(changed.margin, 0.2)
        self.assertEqual(job.tolerance, 8e-2)


class TestFamilySpec(unittest.TestCase):
    def test_build(self):
        handle = FamilySpec(family="huber", params={"alpha": 2.0}, name="h").build()
        self.assertIsInstance(handle.family, Huber)
        self.assertEqual(handle.name, "h")

    def test_unknown_family(self):
        with self.assertRaises(ConfigParse):
            FamilySpec(family="softplus").build()


class TestLoading(unittest.TestCase):
    def test_presets(self):
        names = preset_names()
        for name in ("classical", "example61", "figure1", "figure2", "figure3", "figure4"):
            self.assertIn(name, names)
        self.assertEqual(load_preset("classical").name, "classical")
        self.assertEqual(load_preset("figure1").command, Command.surface)

    def test_unknown_preset(self):
        with self.assertRaises(ConfigParse):
            load_preset("figure9")


def test_load_job(tmp_path):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(classical_document(name="mine")))
    assert load_job(str(path)).name == "mine"


def test_load_job_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigParse):
        load_job(str(broken))
    with pytest.raises(ConfigParse):
        load_job(str(tmp_path / "missing.json"))
