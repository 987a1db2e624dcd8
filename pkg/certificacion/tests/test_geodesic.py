import numpy as np
from django.test import SimpleTestCase

from certificacion.domain import discretize, make_domain
from certificacion.exceptions import BadTimeError, DegenerateCDFError, InvalidDensityError, OutsideDomainError
from certificacion.field import ScalarField, field_from_spec
from certificacion.geodesic import (
    displacement_interpolate,
    geodesic_samples,
    interpolant_density_1d,
    lq_convexity_check,
    lq_convexity_profile,
)
from certificacion.measure import DiscreteMeasure, from_density
from certificacion.transport import monotone_plan, wasserstein_1d, wasserstein_exact

INTERVALO = make_domain({'kind': 'interval', 'a': 0, 'b': 1})
TRIANGULO = make_domain({'kind': 'polygon2d', 'vertices': [[0, 0], [2, 0], [0, 2]]})


def indicadora(malla, a, b):
    x = malla.nodes[:, 0]
    return ScalarField(malla, ((x > a) & (x < b)) / (b - a))


class DisplacementTests(SimpleTestCase):

    def test_extremos(self):
        rng = np.random.default_rng(0)
        mu = DiscreteMeasure.from_atoms(np.sort(rng.uniform(size=(6, 1)), axis=0), rng.uniform(size=6))
        nu = DiscreteMeasure.from_atoms(np.sort(rng.uniform(size=(4, 1)), axis=0), rng.uniform(size=4))
        plan = monotone_plan(mu, nu, 2)
        inicio = displacement_interpolate(plan, 0.0).measure
        final = displacement_interpolate(plan, 1.0).measure
        self.assertAlmostEqual(wasserstein_1d(inicio, mu, 2), 0.0, delta=1e-6)
        self.assertAlmostEqual(wasserstein_1d(final, nu, 2), 0.0, delta=1e-6)

    def test_par_de_diracs(self):
        plan = monotone_plan(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([1.0]), 2)
        muestra = displacement_interpolate(plan, 0.5)
        self.assertEqual(muestra.measure.size, 1)
        self.assertAlmostEqual(float(muestra.measure.points[0, 0]), 0.5)

    def test_tiempo_fuera_de_rango(self):
        plan = monotone_plan(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([1.0]), 2)
        with self.assertRaises(BadTimeError):
            displacement_interpolate(plan, 1.5)

    def test_destino_fuera_del_dominio(self):
        origen = DiscreteMeasure.dirac([0.5], domain=INTERVALO)
        plan = monotone_plan(origen, DiscreteMeasure.dirac([5.0]), 2)
        self.assertEqual(displacement_interpolate(plan, 0.0).measure.size, 1)
        with self.assertRaises(OutsideDomainError):
            displacement_interpolate(plan, 0.5)

    def test_velocidad_constante(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            mu = DiscreteMeasure.from_atoms(rng.uniform(size=(15, 2)), rng.uniform(size=15))
            nu = DiscreteMeasure.from_atoms(rng.uniform(size=(20, 2)), rng.uniform(size=20))
            for m in (2.0, 3.0):
                W, plan = wasserstein_exact(mu, nu, m)
                for t in (0.25, 0.5, 0.75):
                    mu_t = displacement_interpolate(plan, t).measure
                    self.assertAlmostEqual(wasserstein_exact(mu, mu_t, m)[0], t * W, delta=1e-6 * max(W, 1.0))
                    self.assertAlmostEqual(wasserstein_exact(mu_t, nu, m)[0], (1 - t) * W, delta=1e-6 * max(W, 1.0))

    def test_permanece_en_el_dominio(self):
        malla = discretize(TRIANGULO, 10)
        mu = from_density(field_from_spec(malla, 'x1 + 0.1'))
        nu = from_density(field_from_spec(malla, 'x2 + 0.1'))
        for muestra in geodesic_samples(mu, nu, 2, [0.0, 0.3, 0.7, 1.0]):
            self.assertTrue(np.all(TRIANGULO.contains(muestra.measure.points)))
            self.assertAlmostEqual(float(muestra.measure.weights.sum()), 1.0, places=12)


class DensityTests(SimpleTestCase):

    def test_uniforme_hacia_media_uniforme(self):
        malla = discretize(INTERVALO, 400)
        f0 = indicadora(malla, 0.0, 1.0)
        f1 = indicadora(malla, 0.0, 0.5)
        muestra = interpolant_density_1d(f0, f1, 0.5)
        x = malla.nodes[:, 0]
        np.testing.assert_allclose(muestra.density.values[x < 0.75], 4 / 3, atol=1e-9)
        np.testing.assert_allclose(muestra.density.values[x > 0.75], 0.0, atol=1e-9)
        self.assertLessEqual(muestra.mass_drift, 1e-12)

    def test_traslacion_de_una_indicadora(self):
        dominio = make_domain({'kind': 'interval', 'a': 0, 'b': 2})
        malla = discretize(dominio, 200)
        f0, f1 = indicadora(malla, 0.0, 1.0), indicadora(malla, 1.0, 2.0)
        x = malla.nodes[:, 0]
        muestra = interpolant_density_1d(f0, f1, 0.25)
        esperada = ((x > 0.25) & (x < 1.25)).astype(float)
        np.testing.assert_allclose(muestra.density.values, esperada, atol=1e-9)
        for q in (1.0, 2.0, 3.0):
            self.assertLessEqual(lq_convexity_check(f0, f1, q, np.linspace(0, 1, 11)), 1e-8)

    def test_densidades_iguales(self):
        malla = discretize(INTERVALO, 64)
        f = field_from_spec(malla, '1 + 0.5*sin(6*x)')
        f = f.scaled(1.0 / float(f.values @ malla.volumes))
        muestra = interpolant_density_1d(f, f, 0.37)
        np.testing.assert_array_equal(muestra.density.values, f.values)
        self.assertEqual(lq_convexity_check(f, f, 2.0, [0.0, 0.37, 1.0]), 0.0)

    def test_convexidad_de_normas(self):
        malla = discretize(INTERVALO, 1024)
        f0 = field_from_spec(malla, '1')
        f1 = field_from_spec(malla, '2*x')
        for q in (1.0, 2.0, 3.0):
            perfil = lq_convexity_profile(f0, f1, q, np.linspace(0, 1, 11))
            self.assertEqual(len(perfil), 11)
            self.assertLessEqual(max(izq - der for _, izq, der in perfil), 1e-4)

    def test_la_violacion_no_crece_al_refinar(self):
        tiempos = np.linspace(0, 1, 11)
        violaciones = []
        for n in (1024, 2048):
            malla = discretize(INTERVALO, n)
            f0, f1 = field_from_spec(malla, '1'), field_from_spec(malla, '2*x')
            violaciones.append(max(lq_convexity_check(f0, f1, 2.0, tiempos), 0.0))
        self.assertLessEqual(violaciones[1], violaciones[0] + 1e-12)

    def test_coincide_con_la_geodesica_por_plan(self):
        malla = discretize(INTERVALO, 256)
        f0 = field_from_spec(malla, '1')
        f1 = field_from_spec(malla, '2*x')
        muestra = interpolant_density_1d(f0, f1, 0.5)
        por_plan = displacement_interpolate(monotone_plan(from_density(f0), from_density(f1), 2), 0.5)
        self.assertLessEqual(wasserstein_1d(muestra.measure, por_plan.measure, 2), 2 * malla.h[0])

    def test_hueco_en_el_soporte(self):
        malla = discretize(INTERVALO, 100)
        x = malla.nodes[:, 0]
        f1 = ScalarField(malla, 2.0 * ((x < 0.25) | (x > 0.75)))
        with self.assertRaises(DegenerateCDFError):
            interpolant_density_1d(field_from_spec(malla, '1'), f1, 0.5)

    def test_densidad_sin_normalizar(self):
        malla = discretize(INTERVALO, 10)
        with self.assertRaises(InvalidDensityError):
            interpolant_density_1d(field_from_spec(malla, '3'), field_from_spec(malla, '1'), 0.5)
