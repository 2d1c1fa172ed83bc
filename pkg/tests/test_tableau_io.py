import unittest
import json
import numpy as np
import tempfile
import sys
import os

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from methods.cstableau import SymplecticFamilySpec, build_symplectic_family
from methods.quadrature import rule_from_name
from methods.tableau import ParametricTableau, RknTableau, discretize, discretize_parametric
from utils.errors import TableauFormatError
from utils.tableau_io import (
    FORMAT_TAG,
    TableauDocumentValidator,
    deserialize,
    load_tableau,
    require_concrete,
    save_tableau,
    serialize,
    to_document,
)


class TestTableauDocumentValidator(unittest.TestCase):
    """Test suite for tableau document validation"""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.validator = TableauDocumentValidator()
        self.document = to_document(RknTableau.stormer_verlet())

    def test_valid_document(self):
        """Test that a generated document validates."""
        data = self.validator.validate(self.document)
        self.assertEqual(data["r"], 2)
        self.assertFalse(data["parametric"])
        self.assertEqual(data["a_bar"][1][0], 0.5)

    def test_missing_field(self):
        """Test the field path of a missing required field."""
        del self.document["b"]
        with self.assertRaises(TableauFormatError) as ctx:
            self.validator.validate(self.document)
        self.assertEqual(ctx.exception.field_path, "b")

    def test_wrong_format_tag(self):
        """Test rejection of an unknown format tag."""
        self.document["format"] = "butcher/0"
        with self.assertRaises(TableauFormatError) as ctx:
            self.validator.validate(self.document)
        self.assertEqual(ctx.exception.field_path, "format")

    def test_bad_shapes(self):
        """Test rows and vectors whose length disagrees with r."""
        self.document["a_bar"][1] = [0.5]
        with self.assertRaises(TableauFormatError) as ctx:
            self.validator.validate(self.document)
        self.assertEqual(ctx.exception.field_path, "a_bar[1]")

        document = to_document(RknTableau.stormer_verlet())
        document["c"] = [0.0]
        with self.assertRaises(TableauFormatError) as ctx:
            self.validator.validate(document)
        self.assertEqual(ctx.exception.field_path, "c")

    def test_bad_leaves(self):
        """Test non-numeric and malformed affine leaves."""
        self.document["a_bar"][1][0] = "half"
        with self.assertRaises(TableauFormatError) as ctx:
            self.validator.validate(self.document)
        self.assertEqual(ctx.exception.field_path, "a_bar[1][0]")

        document = to_document(RknTableau.stormer_verlet())
        document["b_bar"][0] = {"lin": {"alpha": 1.0}}
        with self.assertRaises(TableauFormatError) as ctx:
            self.validator.validate(document)
        self.assertEqual(ctx.exception.field_path, "b_bar[0]")

    def test_bad_r_and_meta(self):
        """Test r and meta validation."""
        self.document["r"] = True
        with self.assertRaises(TableauFormatError) as ctx:
            self.validator.validate(self.document)
        self.assertEqual(ctx.exception.field_path, "r")

        document = to_document(RknTableau.stormer_verlet())
        document["meta"] = {"source_family_order": "two"}
        with self.assertRaises(TableauFormatError) as ctx:
            self.validator.validate(document)
        self.assertEqual(ctx.exception.field_path, "meta.source_family_order")


class TestTableauSerialization(unittest.TestCase):
    """Test suite for reading and writing tableau files"""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.tableau = discretize(build_symplectic_family(SymplecticFamilySpec(5, {"alpha": 0.1})),
                                  rule_from_name("gauss:3"))
        self.tmpdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmpdir.cleanup()

    def test_concrete_tableau_survives_exactly(self):
        """Test that 17 significant digits restore every double."""
        restored = deserialize(serialize(self.tableau))
        self.assertIsInstance(restored, RknTableau)
        self.assertEqual(restored, self.tableau)
        self.assertEqual(restored.meta["quadrature"], "gauss:3")
        self.assertEqual(restored.meta["source_family_order"], 5)
        self.assertEqual(restored.meta["params"]["alpha"], 0.1)

    def test_output_is_deterministic(self):
        """Test byte-identical output and the document header."""
        text = serialize(self.tableau)
        self.assertEqual(text, serialize(self.tableau))
        document = json.loads(text)
        self.assertEqual(document["format"], FORMAT_TAG)
        self.assertEqual(document["r"], 3)

    def test_parametric_tableau(self):
        """Test the affine variant of the format."""
        pt = discretize_parametric(SymplecticFamilySpec(2), rule_from_name("lobatto:2"))
        restored = deserialize(serialize(pt))
        self.assertIsInstance(restored, ParametricTableau)
        self.assertEqual(restored.parameters, ("alpha", "beta", "gamma"))
        values = {"alpha": 0.25, "beta": 0.1, "gamma": -0.3}
        np.testing.assert_array_equal(restored.specialize(values).a_bar, pt.specialize(values).a_bar)
        with self.assertRaises(TableauFormatError):
            require_concrete(restored, "family.json")

    def test_invalid_json(self):
        """Test the error for unparsable text."""
        with self.assertRaises(TableauFormatError) as ctx:
            deserialize("{not json")
        self.assertEqual(ctx.exception.field_path, "$")

    def test_weights_must_sum_to_one(self):
        """Test that order condition 1 is enforced on load."""
        document = to_document(RknTableau.stormer_verlet())
        document["b"] = [0.5, 0.6]
        with self.assertRaises(TableauFormatError) as ctx:
            deserialize(json.dumps(document))
        self.assertEqual(ctx.exception.field_path, "b")
        self.assertTrue(str(ctx.exception).startswith("b: weights must sum to 1"))

    def test_files(self):
        """Test save and load through the filesystem."""
        path = os.path.join(self.tmpdir.name, "t.json")
        save_tableau(self.tableau, path)
        self.assertEqual(require_concrete(load_tableau(path), path), self.tableau)
        with self.assertRaises(OSError):
            load_tableau(os.path.join(self.tmpdir.name, "missing.json"))

        broken = os.path.join(self.tmpdir.name, "broken.json")
        with open(broken, "w", encoding="utf-8") as handle:
            handle.write('{"format": "rkn-tableau/1"}')
        with self.assertRaises(TableauFormatError) as ctx:
            load_tableau(broken)
        self.assertIn("broken.json", str(ctx.exception))


if __name__ == '__main__':
    unittest.main()
