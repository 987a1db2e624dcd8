import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from django.test import SimpleTestCase
from scipy.spatial.distance import pdist

from certificacion.domain import (
    diameter,
    discretize,
    make_domain,
    random_domain,
    rigid_motion,
    thin_box,
    volume,
)
from certificacion.exceptions import (
    ConfigInvalidError,
    DegenerateError,
    NonConvexError,
    ResolutionTooLowError,
)

TRIANGULO = {'kind': 'polygon2d', 'vertices': [[0, 0], [1, 0], [0, 1]]}


class MakeDomainTests(SimpleTestCase):

    def test_volumenes_basicos(self):
        self.assertEqual(volume(make_domain({'kind': 'interval', 'a': 0, 'b': 1})), 1.0)
        self.assertEqual(volume(make_domain({'kind': 'box', 'lo': [0, 0], 'hi': [1, 0.5]})), 0.5)
        self.assertAlmostEqual(volume(make_domain(TRIANGULO)), 0.5, places=15)

    def test_poligono_horario_se_reorienta(self):
        d = make_domain({'kind': 'polygon2d', 'vertices': [[0, 0], [0, 1], [1, 0]]})
        self.assertGreater(volume(d), 0)

    def test_corbata_no_es_convexa(self):
        with self.assertRaises(NonConvexError):
            make_domain({'kind': 'polygon2d', 'vertices': [[0, 0], [1, 0], [0, 1], [1, 1]]})

    def test_vertice_repetido(self):
        with self.assertRaises(NonConvexError):
            make_domain({'kind': 'polygon2d', 'vertices': [[0, 0], [1, 0], [1, 0], [0, 1]]})

    def test_degenerados(self):
        with self.assertRaises(DegenerateError):
            make_domain({'kind': 'interval', 'a': 1, 'b': 1})
        with self.assertRaises(DegenerateError):
            make_domain({'kind': 'box', 'lo': [0, 0], 'hi': [1, 0]})
        with self.assertRaises(DegenerateError):
            make_domain({'kind': 'polygon2d', 'vertices': [[0, 0], [1, 0], [2, 0]]})

    def test_tipo_desconocido(self):
        with self.assertRaises(ConfigInvalidError):
            make_domain({'kind': 'disk', 'radius': 1})

    def test_describe_vuelve_a_construir_el_mismo_dominio(self):
        for spec in (TRIANGULO, {'kind': 'box', 'lo': [0, 0], 'hi': [2, 1]}):
            d = make_domain(spec)
            otra = make_domain(d.describe())
            self.assertEqual(diameter(d), diameter(otra))
            self.assertEqual(volume(d), volume(otra))


class DiameterTests(SimpleTestCase):

    def test_valores_conocidos(self):
        self.assertEqual(diameter(make_domain({'kind': 'interval', 'a': 0, 'b': 1})), 1.0)
        self.assertAlmostEqual(diameter(make_domain({'kind': 'box', 'lo': [0, 0], 'hi': [1, 1]})), math.sqrt(2))
        for n in (1, 4, 16):
            self.assertAlmostEqual(diameter(thin_box(n)), math.sqrt(1 + 1 / n ** 2), places=14)

    def test_invariancia_por_movimientos_rigidos(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            d = random_domain(rng, 'quadrilateral')
            movido = rigid_motion(d, angle=rng.uniform(0, 2 * math.pi), shift=rng.normal(size=2))
            self.assertAlmostEqual(diameter(movido), diameter(d), delta=1e-10)
            self.assertAlmostEqual(volume(movido), volume(d), delta=1e-10)


class DiscretizeTests(SimpleTestCase):

    def test_intervalo(self):
        malla = discretize(make_domain({'kind': 'interval', 'a': 0, 'b': 1}), 4)
        self.assertEqual(malla.size, 4)
        np.testing.assert_allclose(malla.volumes, 0.25)
        np.testing.assert_allclose(malla.nodes[:, 0], [0.125, 0.375, 0.625, 0.875])

    def test_cuadrado(self):
        malla = discretize(make_domain({'kind': 'box', 'lo': [0, 0], 'hi': [1, 1]}), 3)
        self.assertEqual(malla.size, 9)
        np.testing.assert_allclose(malla.volumes, 1 / 9)

    def test_triangulo_conserva_el_area(self):
        malla = discretize(make_domain(TRIANGULO), 64)
        self.assertAlmostEqual(malla.total_volume, 0.5, delta=1e-6)
        self.assertFalse(malla.regular)

    def test_resolucion_demasiado_baja(self):
        with self.assertRaises(ResolutionTooLowError):
            discretize(make_domain({'kind': 'interval', 'a': 0, 'b': 1}), 1)

    def test_nodos_dentro_del_dominio(self):
        d = make_domain(TRIANGULO)
        malla = discretize(d, 16)
        self.assertTrue(np.all(d.contains(malla.nodes)))
        self.assertLessEqual(pdist(malla.nodes).max(), diameter(d) + 1e-12)

    def test_vecinos_en_la_malla_recortada(self):
        malla = discretize(make_domain(TRIANGULO), 8)
        derecha = malla.neighbour(0, 1)
        hay = derecha >= 0
        np.testing.assert_array_equal(malla.index[derecha[hay], 0], malla.index[hay, 0] + 1)

    def test_vecinos_fijos_y_compartibles_entre_hilos(self):
        malla = discretize(make_domain(TRIANGULO), 12)
        esperado = {(eje, paso): malla.neighbour(eje, paso).copy() for eje in range(2) for paso in (-1, 1)}
        with ThreadPoolExecutor(max_workers=4) as pool:
            vistos = list(pool.map(lambda clave: malla.neighbour(*clave), list(esperado) * 8))
        for clave, vecinos in zip(list(esperado) * 8, vistos):
            np.testing.assert_array_equal(vecinos, esperado[clave])
        for (eje, paso), vecinos in esperado.items():
            hay = vecinos >= 0
            np.testing.assert_array_equal(malla.neighbour(eje, -paso)[vecinos[hay]], np.flatnonzero(hay))
        with self.assertRaises(ValueError):
            malla.neighbour(0, 1)[0] = 3
