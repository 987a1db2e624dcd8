import logging
import sys

from django.core.management.base import BaseCommand, CommandError

from certificacion.exceptions import ConfigInvalidError, ErrorCertificacion
from certificacion.experimentos import (
    SUBCOMANDOS,
    cargar_configuracion,
    escribir_salidas,
    guardar,
    preparar,
    run,
    version_info,
)
from certificacion.transport import METHODS

AYUDAS = {
    'certify': 'Certifica todas las desigualdades de un campo sobre un dominio.',
    'sweep': 'Barrido de dominios, campos y pares (p, q).',
    'eigen': 'Autovalor de Neumann del p-Laplaciano y sus cotas por diámetro.',
    'geodesic': 'Interpolación por desplazamiento y convexidad de normas L^q.',
    'scaling': 'Estudio de escalamiento en cajas delgadas.',
}


class Command(BaseCommand):
    help = 'Certificación numérica de desigualdades de Poincaré-Wirtinger por transporte óptimo.'

    def add_arguments(self, parser):
        # Errores de uso: CommandError con código 1; el 2 queda para las violaciones
        parser.called_from_command_line = False
        subparsers = parser.add_subparsers(dest='subcomando', required=True)
        for nombre in SUBCOMANDOS:
            sub = subparsers.add_parser(nombre, help=AYUDAS[nombre])
            sub.add_argument('--config', required=True, help='Archivo JSON del experimento.')
            sub.add_argument('--out', default=None, help='Directorio de salida (por defecto resultados/).')
            sub.add_argument('--seed', type=int, default=None)
            sub.add_argument('--solver', choices=('auto',) + METHODS, default=None)
            sub.add_argument('--resolution', type=int, default=None)
            sub.add_argument('--workers', type=int, default=None, help='Hilos del barrido.')
            sub.add_argument('--quiet', action='store_true', help='Solo advertencias y errores.')
            sub.add_argument('--timings', action='store_true', help='Escribe runtime_ms en el CSV.')
            sub.add_argument('--excel', action='store_true', help='Exporta también a Excel.')
            sub.add_argument('--pdf', action='store_true', help='Exporta también un resumen en PDF.')
            sub.add_argument('--guardar', action='store_true', help='Guarda el experimento en la base de datos.')

        version = subparsers.add_parser('version', help='Versión, topes y tolerancias.')
        version.add_argument('--tolerances', action='store_true')
        version.add_argument('--schema', action='store_true')

    def run_from_argv(self, argv):
        try:
            super().run_from_argv(argv)
        except CommandError as exc:
            # Django analiza argv fuera de su propio try
            self.stderr.write(str(exc))
            sys.exit(exc.returncode)

    def handle(self, *args, **options):
        subcomando = options['subcomando']
        if subcomando == 'version':
            self.stdout.write(version_info(options['tolerances'], options['schema']))
            return

        registro = logging.getLogger('certificacion')
        nivel = registro.level
        if options['quiet']:
            registro.setLevel(logging.WARNING)
        try:
            self._ejecutar(subcomando, options)
        finally:
            registro.setLevel(nivel)

    def _ejecutar(self, subcomando, options):
        quiet = options['quiet']
        try:
            datos = cargar_configuracion(options['config'])
            cfg, datos = preparar(subcomando, datos, options['seed'], options['solver'], options['resolution'])
            if options['workers']:
                cfg['workers'] = options['workers']
            resultado = run(subcomando, cfg)
            out = options['out'] or datos.get('out') or 'resultados'
            archivos = escribir_salidas(resultado, out, options['timings'], options['excel'], options['pdf'])
            if options['guardar']:
                experimento = guardar(resultado, datos)
                if not quiet:
                    self.stdout.write(f'Experimento guardado con id {experimento.pk}')
        except ConfigInvalidError as exc:
            raise CommandError(f'Configuración inválida: {exc}', returncode=1)
        except ErrorCertificacion as exc:
            raise CommandError(f'{type(exc).__name__}: {exc}', returncode=1)

        if not quiet:
            for linea in resultado.resumen:
                self.stdout.write(linea)
            for ruta in archivos:
                self.stdout.write(f'  {ruta}')

        if resultado.violaciones:
            for clave, reporte in resultado.reportes:
                if not reporte.passed:
                    self.stderr.write(
                        f'{clave} {reporte.id}: holgura {reporte.slack:.6e} < -{reporte.error_bar:.3e}'
                    )
            raise CommandError(f'{resultado.violaciones} desigualdad(es) violada(s)', returncode=2)
        if resultado.errores:
            for error in resultado.errores:
                self.stderr.write(error)
            raise CommandError(f'{len(resultado.errores)} instancia(s) con error del solver', returncode=1)

        if not quiet:
            self.stdout.write(self.style.SUCCESS(
                f'{resultado.subcomando} {resultado.experiment_id}: {len(resultado.reportes)} reportes, todos aprobados'
            ))
