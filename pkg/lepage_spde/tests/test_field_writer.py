import os
import tempfile
import unittest
import cv2
import numpy as np
from lepage_spde import CSV_FieldWriter, Heatmap_FieldWriter, diverging_lut

class test_field_writer(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.ts = np.array([0.0, 1.0])
        self.xs = np.array([0.0, 0.5, 1.0])
        self.u = np.array([[1.0, 0.0, 2.0], [1.0, 1.0, 1.0]])

    def tearDown(self):
        self.tmp.cleanup()

    def test_CSV_FieldWriter(self):
        filename = os.path.join(self.tmp.name, 'field.csv')
        CSV_FieldWriter(filename).write_field(self.ts, self.xs, self.u)
        with open(filename) as f:
            self.assertEqual(f.readline().strip(), 't,x,u')
        table = np.loadtxt(filename, delimiter=',', skiprows=1)
        self.assertEqual(table.shape, (6, 3))
        # t is the outer loop
        self.assertTrue(np.array_equal(table[:3, 0], [0.0, 0.0, 0.0]))
        self.assertTrue(np.array_equal(table[:3, 1], self.xs))
        self.assertTrue(np.array_equal(table[:, 2], self.u.ravel()))

    def test_Heatmap_FieldWriter(self):
        filename = os.path.join(self.tmp.name, 'field.png')
        writer = Heatmap_FieldWriter(filename, pixels_per_node=4)
        writer.write_field(self.ts, self.xs, self.u)
        image = cv2.imread(filename)
        self.assertEqual(image.shape, (8, 12, 3))

        # t = 0 is the bottom row
        self.assertEqual(tuple(image[-1, 4]), (255, 0, 0))
        self.assertEqual(tuple(image[-1, 8]), (0, 0, 255))
        self.assertTrue(np.all(image[0, 0] >= 250))

    def test_constant_field(self):
        image = Heatmap_FieldWriter().to_image(np.ones((3, 3)))
        self.assertTrue(np.all(image >= 250))
        image = Heatmap_FieldWriter().to_image(np.full((2, 2), np.nan))
        self.assertTrue(np.all(image >= 250))

    def test_write_failure(self):
        filename = os.path.join(self.tmp.name, 'missing', 'field.png')
        with self.assertRaises(IOError):
            Heatmap_FieldWriter(filename).write_field(self.ts, self.xs, self.u)

class test_diverging_lut(unittest.TestCase):

    def test_lut(self):
        lut = diverging_lut()
        self.assertEqual(lut.shape, (256, 1, 3))
        self.assertEqual(tuple(lut[0, 0]), (255, 0, 0))
        self.assertEqual(tuple(lut[255, 0]), (0, 0, 255))
        self.assertTrue(np.all(lut[127:129, 0] >= 250))

if __name__ == '__main__':
    unittest.main()
