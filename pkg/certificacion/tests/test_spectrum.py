import math

import numpy as np
from django.test import SimpleTestCase
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from certificacion.domain import diameter, discretize, make_domain, thin_box
from certificacion.exceptions import InvalidExponentError
from certificacion.field import ScalarField, field_from_spec, signed_power_integral
from certificacion.spectrum import (
    neumann_eigenvalue,
    neumann_energy,
    pi_p,
    richardson_eigenvalue,
    stiffness,
)

INTERVALO = make_domain({'kind': 'interval', 'a': 0, 'b': 1})
CUADRADO = make_domain({'kind': 'box', 'lo': [0, 0], 'hi': [1, 1]})


def disparo_p_laplaciano(p, mu):
    """Flujo |u'|^{p-2} u' en x = 1 para u(0) = 1, u'(0) = 0."""
    p_conj = p / (p - 1.0)

    def sistema(_, y):
        u, w = y
        return [np.sign(w) * abs(w) ** (p_conj - 1.0), -mu * np.sign(u) * abs(u) ** (p - 1.0)]

    sol = solve_ivp(sistema, (0.0, 1.0), [1.0, 0.0], rtol=1e-11, atol=1e-13)
    return sol.y[1, -1]


class PiPTests(SimpleTestCase):

    def test_valores(self):
        self.assertAlmostEqual(pi_p(2), math.pi, places=15)
        self.assertAlmostEqual(pi_p(3), 3.04702, delta=1e-5)

    def test_dualidad(self):
        for p in (1.5, 1.25, 4.0 / 3.0):
            self.assertAlmostEqual(pi_p(p), pi_p(p / (p - 1)), places=12)

    def test_exponente_invalido(self):
        with self.assertRaises(InvalidExponentError):
            pi_p(1.0)


class EnergyTests(SimpleTestCase):

    def test_constantes_en_el_nucleo(self):
        malla = discretize(CUADRADO, 8)
        self.assertEqual(neumann_energy(field_from_spec(malla, '3'), 2.5), 0.0)

    def test_forma_cuadratica_para_p_dos(self):
        malla = discretize(make_domain({'kind': 'polygon2d', 'vertices': [[0, 0], [1, 0], [0, 1]]}), 12)
        u = field_from_spec(malla, 'sin(3*x1) + x2^2')
        A, _ = stiffness(malla)
        self.assertAlmostEqual(neumann_energy(u, 2), float(u.values @ (A @ u.values)), places=10)

    def test_lineal_en_el_intervalo(self):
        u = field_from_spec(discretize(INTERVALO, 32), 'x')
        self.assertAlmostEqual(neumann_energy(u, 3), 1.0 - 1.0 / 32, places=12)


class NeumannEigenvalueTests(SimpleTestCase):

    def test_intervalo_p_dos(self):
        estimacion = richardson_eigenvalue(INTERVALO, 2, [256, 512, 1024])
        self.assertAlmostEqual(estimacion.finest / math.pi ** 2, 1.0, delta=5e-3)
        self.assertAlmostEqual(estimacion.value / math.pi ** 2, 1.0, delta=1e-5)
        self.assertLessEqual(abs(estimacion.finest - math.pi ** 2), estimacion.error_bar)

    def test_convergencia_monotona(self):
        errores = [abs(neumann_eigenvalue(discretize(INTERVALO, r), 2).eigenvalue - math.pi ** 2) for r in (32, 64, 128)]
        self.assertLess(errores[1], errores[0])
        self.assertLess(errores[2], errores[1])

    def test_cuadrado_p_dos(self):
        resultado = neumann_eigenvalue(discretize(CUADRADO, 128), 2)
        self.assertAlmostEqual(resultado.eigenvalue / math.pi ** 2, 1.0, delta=1e-2)
        self.assertLessEqual(resultado.constraint_residual, 1e-10)
        self.assertAlmostEqual(float(resultado.eigenfunction.values ** 2 @ resultado.eigenfunction.grid.volumes), 1.0)

    def test_intervalo_p_tres_contra_disparo(self):
        mu_ref = brentq(lambda mu: disparo_p_laplaciano(3.0, mu), 15.0, 40.0, xtol=1e-10)
        self.assertAlmostEqual(mu_ref, pi_p(3) ** 3, delta=1e-3 * mu_ref)
        resultado = neumann_eigenvalue(discretize(INTERVALO, 1024), 3)
        self.assertAlmostEqual(resultado.eigenvalue / mu_ref, 1.0, delta=2e-2)
        self.assertEqual(resultado.method, 'descent')
        residuo = abs(signed_power_integral(resultado.eigenfunction, 3))
        self.assertLessEqual(residuo, 1e-8)

    def test_escalamiento(self):
        doble = make_domain({'kind': 'interval', 'a': 0, 'b': 2})
        for p in (2.0, 3.0):
            uno = neumann_eigenvalue(discretize(INTERVALO, 128), p).eigenvalue
            dos = neumann_eigenvalue(discretize(doble, 128), p).eigenvalue
            self.assertAlmostEqual(dos * 2 ** p / uno, 1.0, delta=1e-2)

    def test_cota_inferior_por_diametro(self):
        triangulo = make_domain({'kind': 'polygon2d', 'vertices': [[0, 0], [1, 0], [0.2, 0.9]]})
        for dominio, p in ((triangulo, 2.0), (thin_box(2), 3.0), (INTERVALO, 1.5)):
            mu = neumann_eigenvalue(discretize(dominio, 24), p).eigenvalue
            self.assertGreaterEqual(mu, 2 ** (p - 1) / diameter(dominio) ** p)

    def test_autofuncion_ortogonal_a_constantes(self):
        resultado = neumann_eigenvalue(discretize(thin_box(4), 32), 2)
        u = resultado.eigenfunction
        self.assertLessEqual(abs(float(u.values @ u.grid.volumes)), 1e-10)
        self.assertIsInstance(u, ScalarField)
