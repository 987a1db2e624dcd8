import csv
import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import openpyxl
from django.core.management import call_command
from django.core.management.base import CommandError
from django.template.loader import render_to_string
from django.test import SimpleTestCase, TestCase

from certificacion.certify import COLUMNS, InequalityReport
from certificacion.exceptions import NoConvergenceError
from certificacion.experimentos import preparar
from certificacion.exportar import leer_reportes
from certificacion.management.commands.desigualdades import Command
from certificacion.models import Experimento, ReporteDesigualdad

CERTIFY = {
    'experiment_id': 'lineal',
    'domain': {'kind': 'interval', 'a': 0, 'b': 1},
    'field': 'x - 0.5',
    'p': 3,
    'q': 2,
    'resolution': 64,
}

SWEEP = {
    'experiment_id': 'barrido',
    'domains': [{'kind': 'box', 'lo': [0, 0], 'hi': [1, 1]}],
    'random_domains': {'count': 2, 'kinds': ['interval']},
    'field_specs': ['x1 - 0.3*x1^2'],
    'random_fields': {'count': 2, 'degree': 2},
    'params': [[3, 2], [2.5, 1.5]],
    'q_limit': [2.2, 2.8],
    'resolution': 16,
    'seed': 5,
    'workers': 3,
}


class ComandoTestCase(TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def configuracion(self, datos, nombre='config.json'):
        ruta = self.tmp / nombre
        ruta.write_text(json.dumps(datos), encoding='utf-8')
        return str(ruta)

    def ejecutar(self, subcomando, datos, *extra, out='salida'):
        stdout, stderr = StringIO(), StringIO()
        call_command(
            'desigualdades', subcomando, '--config', self.configuracion(datos), '--out', str(self.tmp / out),
            *extra, stdout=stdout, stderr=stderr,
        )
        return stdout.getvalue()


class CertifyComandoTests(ComandoTestCase):

    def test_cinco_reportes_aprobados(self):
        salida = self.ejecutar('certify', CERTIFY)
        filas = leer_reportes(self.tmp / 'salida' / 'lineal_reports.csv')
        self.assertEqual(len(filas), 5)
        self.assertEqual(tuple(filas[0]), COLUMNS)
        self.assertEqual([f['inequality_id'] for f in filas], ['main', 'moment', 'triangle', 'nash', 'pw'])
        self.assertTrue(all(f['experiment_id'] == 'lineal/p=3,q=2' for f in filas))
        self.assertTrue(all(f['runtime_ms'] == '0' for f in filas))
        self.assertIn('todos aprobados', salida)

    def test_los_flotantes_se_releen_sin_perdida(self):
        self.ejecutar('certify', CERTIFY)
        for fila in leer_reportes(self.tmp / 'salida' / 'lineal_reports.csv'):
            for columna in ('lhs', 'rhs', 'slack', 'error_bar'):
                self.assertEqual(repr(float(fila[columna])), fila[columna])
            self.assertEqual(float(fila['slack']), float(fila['rhs']) - float(fila['lhs']))

    def test_detalle_por_lineas(self):
        self.ejecutar('certify', CERTIFY, '--timings')
        lineas = (self.tmp / 'salida' / 'lineal_detail.jsonl').read_text(encoding='utf-8').splitlines()
        self.assertEqual(len(lineas), 5)
        registro = json.loads(lineas[0])
        self.assertTrue(registro['passed'])
        self.assertIn('W', registro['extra'])
        # Sin coarse_resolution la barra de error compara con la mitad de la resolución
        self.assertEqual(registro['extra']['coarse_resolution'], 32)
        self.assertGreater(registro['error_bar'], 0.0)

    def test_q_mayor_que_p(self):
        with self.assertRaises(CommandError) as ctx:
            self.ejecutar('certify', dict(CERTIFY, p=2, q=3))
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn('1 < q < p', str(ctx.exception))

    def test_json_invalido(self):
        ruta = self.tmp / 'roto.json'
        ruta.write_text('{"experiment_id": ', encoding='utf-8')
        with self.assertRaises(CommandError) as ctx:
            call_command('desigualdades', 'certify', '--config', str(ruta), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)

    def test_error_numerico(self):
        # El campo nulo no cambia de signo ni siquiera tras desplazarlo
        with self.assertRaises(CommandError) as ctx:
            self.ejecutar('certify', dict(CERTIFY, field='0'))
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn('OneSignedError', str(ctx.exception))

    def test_expresion_ilegible(self):
        with self.assertRaises(CommandError) as ctx:
            self.ejecutar('certify', dict(CERTIFY, field='x1 + ('))
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn('Configuración inválida', str(ctx.exception))

    def test_violacion_sale_con_codigo_dos(self):
        violada = InequalityReport(id='main', p=3.0, q=2.0, domain='interval(0,1)', resolution=64, lhs=2.0, rhs=1.0)
        stderr = StringIO()
        with mock.patch('certificacion.experimentos.certify_instance', return_value=[violada]):
            with self.assertRaises(CommandError) as ctx:
                call_command('desigualdades', 'certify', '--config', self.configuracion(CERTIFY),
                             '--out', str(self.tmp / 'salida'), stdout=StringIO(), stderr=stderr)
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('holgura', stderr.getvalue())

    def test_guardar_en_la_base_de_datos(self):
        self.ejecutar('certify', CERTIFY, '--guardar')
        experimento = Experimento.objects.get()
        self.assertEqual(experimento.subcomando, 'certify')
        self.assertEqual(experimento.estado, 'aprobado')
        self.assertEqual(experimento.total_reportes, 5)
        self.assertEqual(experimento.peor_holgura, min(r.holgura for r in ReporteDesigualdad.objects.all()))
        self.assertTrue(all(r.aprobado for r in ReporteDesigualdad.objects.all()))

    def test_exportar_excel(self):
        self.ejecutar('certify', CERTIFY, '--excel', '--quiet')
        libro = openpyxl.load_workbook(self.tmp / 'salida' / 'lineal_reports.xlsx')
        hoja = libro.active
        self.assertEqual(hoja.max_row, 6)
        self.assertEqual(hoja.cell(1, 1).value, 'experiment_id')
        self.assertTrue(hoja.cell(1, 1).font.bold)
        self.assertEqual(hoja.cell(2, len(COLUMNS) + 1).value, 'ok')

    def test_plantilla_del_pdf_marca_violaciones(self):
        fila = InequalityReport(id='pw', p=3.0, q=2.0, domain='d', resolution=8, lhs=2.0, rhs=1.0).row('x')
        html = render_to_string('certificacion/reporte_pdf.html', {
            'experiment_id': 'x', 'filas': [dict(fila, violada=True)], 'violadas': 1,
        })
        self.assertIn('class="violada"', html)


class SweepComandoTests(ComandoTestCase):

    def test_csv_determinista(self):
        self.ejecutar('sweep', SWEEP, out='a')
        self.ejecutar('sweep', dict(SWEEP, workers=1), out='b')
        primero = (self.tmp / 'a' / 'barrido_reports.csv').read_bytes()
        segundo = (self.tmp / 'b' / 'barrido_reports.csv').read_bytes()
        self.assertEqual(primero, segundo)
        filas = list(csv.DictReader(StringIO(primero.decode('utf-8'))))
        claves = [f['experiment_id'] for f in filas]
        self.assertEqual(claves, sorted(claves))
        self.assertTrue(any('/qlim=' in c for c in claves))

    def test_error_del_solver(self):
        with mock.patch('certificacion.experimentos.certify_instance', side_effect=NoConvergenceError('sin convergencia')):
            with self.assertRaises(CommandError) as ctx:
                self.ejecutar('sweep', SWEEP)
        self.assertEqual(ctx.exception.returncode, 1)

    def test_error_numerico_no_tumba_el_barrido(self):
        with mock.patch('certificacion.experimentos.certify_instance', side_effect=ValueError('math domain error')):
            with self.assertRaises(CommandError) as ctx:
                self.ejecutar('sweep', SWEEP)
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertTrue((self.tmp / 'salida' / 'barrido_reports.csv').exists())

    def test_campo_invalido_se_informa_y_el_resto_sigue(self):
        datos = {k: v for k, v in SWEEP.items() if not k.startswith('random_')}
        datos['field_specs'] = ['sqrt(x1 - 0.5)', 'x1 - 0.3*x1^2']
        with self.assertRaises(CommandError) as ctx:
            self.ejecutar('sweep', datos)
        self.assertEqual(ctx.exception.returncode, 1)
        claves = {f['experiment_id'] for f in leer_reportes(self.tmp / 'salida' / 'barrido_reports.csv')}
        self.assertTrue(claves)
        self.assertTrue(all('/f001/' in c for c in claves))


class EstudiosComandoTests(ComandoTestCase):

    def test_eigen(self):
        self.ejecutar('eigen', {
            'experiment_id': 'autovalores',
            'domains': [{'kind': 'interval', 'a': 0, 'b': 1}],
            'p': [2, 3],
            'resolution': 64,
        })
        filas = leer_reportes(self.tmp / 'salida' / 'autovalores_reports.csv')
        self.assertEqual([f['inequality_id'] for f in filas], ['eigen_pw', 'eigen_sharp'] * 2)
        self.assertTrue((self.tmp / 'salida' / 'autovalores_eigen.csv').exists())

    def test_geodesic(self):
        self.ejecutar('geodesic', {
            'experiment_id': 'geo',
            'domain': {'kind': 'interval', 'a': 0, 'b': 1},
            'f0': '1',
            'f1': '2*x',
            'q': [1, 2],
            'times': [0, 0.5, 1],
            'resolution': 128,
        })
        convexidad = leer_reportes(self.tmp / 'salida' / 'geo_convexity.csv')
        self.assertEqual(len(convexidad), 6)
        for fila in convexidad:
            self.assertLessEqual(float(fila['norm']), float(fila['convex_bound']) + 1e-4)
        self.assertTrue((self.tmp / 'salida' / 'geo_geodesic.csv').exists())
        plan = leer_reportes(self.tmp / 'salida' / 'geo_plan.csv')
        self.assertAlmostEqual(sum(float(f['weight']) for f in plan), 1.0, places=12)
        medida = leer_reportes(self.tmp / 'salida' / 'geo_mu0.csv')
        self.assertEqual(list(medida[0]), ['x1', 'weight'])

    def test_scaling(self):
        salida = self.ejecutar('scaling', {
            'experiment_id': 'delgadas',
            'params': [[3, 2]],
            'n': [1, 2, 4],
            'resolution': 8,
        })
        filas = leer_reportes(self.tmp / 'salida' / 'delgadas_scaling.csv')
        self.assertEqual(len(filas), 3)
        self.assertIn('pendiente', salida)


class VersionComandoTests(TestCase):

    def test_version(self):
        salida = StringIO()
        call_command('desigualdades', 'version', stdout=salida)
        self.assertIn('certificacion 1.0.0', salida.getvalue())

    def test_tolerancias_y_esquema(self):
        salida = StringIO()
        call_command('desigualdades', 'version', '--tolerances', '--schema', stdout=salida)
        texto = salida.getvalue()
        self.assertIn('CONSTRAINT_TOL = 1e-08', texto)
        self.assertIn('"experiment_id"', texto)


class TerminalComandoTests(ComandoTestCase):
    """Códigos de salida tal como los ve la terminal (run_from_argv)."""

    def desde_terminal(self, *argv):
        stderr = StringIO()
        comando = Command(stdout=StringIO(), stderr=stderr)
        with self.assertRaises(SystemExit) as ctx:
            comando.run_from_argv(['manage.py', 'desigualdades', *argv])
        return ctx.exception.code, stderr.getvalue()

    def test_falta_config(self):
        codigo, mensaje = self.desde_terminal('certify')
        self.assertEqual(codigo, 1)
        self.assertIn('--config', mensaje)

    def test_solver_desconocido(self):
        codigo, _ = self.desde_terminal('certify', '--config', self.configuracion(CERTIFY), '--solver', 'simplex')
        self.assertEqual(codigo, 1)

    def test_subcomando_desconocido(self):
        codigo, _ = self.desde_terminal('integrar')
        self.assertEqual(codigo, 1)

    def test_violacion(self):
        violada = InequalityReport(id='main', p=3.0, q=2.0, domain='interval(0,1)', resolution=64, lhs=2.0, rhs=1.0)
        with mock.patch('certificacion.experimentos.certify_instance', return_value=[violada]):
            codigo, _ = self.desde_terminal('certify', '--config', self.configuracion(CERTIFY),
                                            '--out', str(self.tmp / 'salida'))
        self.assertEqual(codigo, 2)


class PrepararTests(SimpleTestCase):

    def test_malla_gruesa_por_defecto(self):
        cfg, _ = preparar('certify', CERTIFY)
        self.assertEqual(cfg['coarse_resolution'], 32)
        cfg, _ = preparar('sweep', SWEEP, resolution=9)
        self.assertEqual(cfg['coarse_resolution'], 4)

    def test_malla_gruesa_explicita_o_imposible(self):
        cfg, _ = preparar('certify', dict(CERTIFY, coarse_resolution=16))
        self.assertEqual(cfg['coarse_resolution'], 16)
        cfg, _ = preparar('certify', dict(CERTIFY, resolution=3))
        self.assertIsNone(cfg.get('coarse_resolution'))
