from django.db import models
from django.core.validators import MinValueValidator

from .certify import INEQUALITIES

# --- EJECUCIONES DEL COMANDO Y SUS REPORTES ---


class Experimento(models.Model):
    SUBCOMANDO_CHOICES = [
        ('certify', 'Certificación de una instancia'),
        ('sweep', 'Barrido de parámetros'),
        ('eigen', 'Autovalores y cotas'),
        ('geodesic', 'Geodésicas'),
        ('scaling', 'Cajas delgadas'),
    ]

    ESTADO_CHOICES = [
        ('aprobado', 'Aprobado'),
        ('violado', 'Desigualdad violada'),
    ]

    nombre = models.CharField(max_length=200, verbose_name='Nombre del Experimento')
    subcomando = models.CharField(
        max_length=20,
        choices=SUBCOMANDO_CHOICES,
        verbose_name='Subcomando'
    )
    configuracion = models.JSONField(default=dict, verbose_name='Configuración')
    semilla = models.IntegerField(blank=True, null=True, verbose_name='Semilla')
    estado = models.CharField(
        max_length=10,
        choices=ESTADO_CHOICES,
        default='aprobado',
        verbose_name='Estado'
    )
    fecha_creacion = models.DateTimeField(auto_now_add=True, verbose_name='Fecha de Ejecución')

    class Meta:
        verbose_name = 'Experimento'
        verbose_name_plural = 'Experimentos'
        ordering = ['-fecha_creacion', '-id']

    def __str__(self):
        return f'{self.nombre} ({self.subcomando})'

    @property
    def total_reportes(self):
        return self.reportes.count()

    @property
    def peor_holgura(self):
        # Holgura más negativa entre los reportes
        peor = self.reportes.aggregate(models.Min('holgura'))['holgura__min']
        return peor


class ReporteDesigualdad(models.Model):
    DESIGUALDAD_CHOICES = [(ident, ident) for ident in INEQUALITIES]

    experimento = models.ForeignKey(
        Experimento,
        on_delete=models.CASCADE,
        related_name='reportes',
        verbose_name='Experimento'
    )
    clave = models.CharField(max_length=200, verbose_name='Clave del Experimento')
    desigualdad = models.CharField(
        max_length=20,
        choices=DESIGUALDAD_CHOICES,
        verbose_name='Desigualdad'
    )
    p = models.FloatField()
    q = models.FloatField(blank=True, null=True)
    r = models.FloatField(blank=True, null=True)
    dominio = models.CharField(max_length=200, verbose_name='Dominio')
    resolucion = models.IntegerField(validators=[MinValueValidator(2)], verbose_name='Resolución')
    solver = models.CharField(max_length=20, verbose_name='Solver')
    lhs = models.FloatField(verbose_name='Lado Izquierdo')
    rhs = models.FloatField(verbose_name='Lado Derecho')
    holgura = models.FloatField(verbose_name='Holgura')
    barra_error = models.FloatField(validators=[MinValueValidator(0.0)], verbose_name='Barra de Error')
    tiempo_ms = models.FloatField(default=0.0, verbose_name='Tiempo (ms)')
    extra = models.JSONField(default=dict, blank=True)

    class Meta:
        verbose_name = 'Reporte de Desigualdad'
        verbose_name_plural = 'Reportes de Desigualdad'
        ordering = ['clave', 'id']

    def __str__(self):
        return f'{self.clave} - {self.desigualdad}: holgura {self.holgura:.3e}'

    @property
    def aprobado(self):
        return self.holgura >= -self.barra_error

    @classmethod
    def desde_reporte(cls, experimento, clave, reporte):
        """Instancia (sin guardar) a partir de un InequalityReport."""
        detalle = reporte.detail(clave)
        return cls(
            experimento=experimento,
            clave=clave,
            desigualdad=reporte.id,
            p=reporte.p,
            q=reporte.q,
            r=reporte.r,
            dominio=reporte.domain,
            resolucion=reporte.resolution,
            solver=reporte.solver,
            lhs=reporte.lhs,
            rhs=reporte.rhs,
            holgura=reporte.slack,
            barra_error=reporte.error_bar,
            tiempo_ms=reporte.runtime_ms,
            extra=detalle['extra'],
        )
