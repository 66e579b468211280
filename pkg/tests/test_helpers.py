import unittest

import numpy as np

from core.errors import DomainError, InvalidInputError
from utils.helpers import check_probabilities, parse_float_list, parse_grid, slug


class ParseGridTest(unittest.TestCase):

    def test_example(self):
        np.testing.assert_allclose(parse_grid('8:10:5'), [8.0, 8.5, 9.0, 9.5, 10.0])
        np.testing.assert_allclose(parse_grid('3:3:1'), [3.0])

    def test_bad_grids(self):
        for text in ('8:10', '8:ten:5', '10:8:5', '8:10:0'):
            with self.assertRaises(InvalidInputError, msg=text):
                parse_grid(text)


class ParseFloatListTest(unittest.TestCase):

    def test_forms(self):
        self.assertEqual(parse_float_list(['0.95', '0.99']), [0.95, 0.99])
        self.assertEqual(parse_float_list(['0.95,0.99 0.995']), [0.95, 0.99, 0.995])

    def test_garbage(self):
        with self.assertRaises(InvalidInputError):
            parse_float_list(['0.9,x'])


class CheckProbabilitiesTest(unittest.TestCase):

    def test_bounds(self):
        self.assertEqual(check_probabilities([0.5, 0.99], 'var'), [0.5, 0.99])
        for q in (0.0, 1.0, 1.5):
            with self.assertRaises(DomainError):
                check_probabilities([q], 'var')

    def test_message_names_operation(self):
        with self.assertRaisesRegex(DomainError, '^var: '):
            check_probabilities([2.0], 'var')


class SlugTest(unittest.TestCase):

    def test_slug(self):
        self.assertEqual(slug('Male'), 'male')
        self.assertEqual(slug('Young drivers / 2024'), 'young_drivers_2024')
        self.assertEqual(slug('***'), 'all')


if __name__ == '__main__':
    unittest.main()
