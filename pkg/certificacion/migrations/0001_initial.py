# Generated by Django 5.2.8 on 2026-10-19 10:12

import django.core.validators
import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='Experimento',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('nombre', models.CharField(max_length=200, verbose_name='Nombre del Experimento')),
                ('subcomando', models.CharField(choices=[('certify', 'Certificación de una instancia'), ('sweep', 'Barrido de parámetros'), ('eigen', 'Autovalores y cotas'), ('geodesic', 'Geodésicas'), ('scaling', 'Cajas delgadas')], max_length=20, verbose_name='Subcomando')),
                ('configuracion', models.JSONField(default=dict, verbose_name='Configuración')),
                ('semilla', models.IntegerField(blank=True, null=True, verbose_name='Semilla')),
                ('estado', models.CharField(choices=[('aprobado', 'Aprobado'), ('violado', 'Desigualdad violada')], default='aprobado', max_length=10, verbose_name='Estado')),
                ('fecha_creacion', models.DateTimeField(auto_now_add=True, verbose_name='Fecha de Ejecución')),
            ],
            options={
                'verbose_name': 'Experimento',
                'verbose_name_plural': 'Experimentos',
                'ordering': ['-fecha_creacion', '-id'],
            },
        ),
        migrations.CreateModel(
            name='ReporteDesigualdad',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('clave', models.CharField(max_length=200, verbose_name='Clave del Experimento')),
                ('desigualdad', models.CharField(choices=[('main', 'main'), ('moment', 'moment'), ('triangle', 'triangle'), ('expedient', 'expedient'), ('nash', 'nash'), ('pw', 'pw'), ('eigen_pw', 'eigen_pw'), ('eigen_sharp', 'eigen_sharp')], max_length=20, verbose_name='Desigualdad')),
                ('p', models.FloatField()),
                ('q', models.FloatField(blank=True, null=True)),
                ('r', models.FloatField(blank=True, null=True)),
                ('dominio', models.CharField(max_length=200, verbose_name='Dominio')),
                ('resolucion', models.IntegerField(validators=[django.core.validators.MinValueValidator(2)], verbose_name='Resolución')),
                ('solver', models.CharField(max_length=20, verbose_name='Solver')),
                ('lhs', models.FloatField(verbose_name='Lado Izquierdo')),
                ('rhs', models.FloatField(verbose_name='Lado Derecho')),
                ('holgura', models.FloatField(verbose_name='Holgura')),
                ('barra_error', models.FloatField(validators=[django.core.validators.MinValueValidator(0.0)], verbose_name='Barra de Error')),
                ('tiempo_ms', models.FloatField(default=0.0, verbose_name='Tiempo (ms)')),
                ('extra', models.JSONField(blank=True, default=dict)),
                ('experimento', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='reportes', to='certificacion.experimento', verbose_name='Experimento')),
            ],
            options={
                'verbose_name': 'Reporte de Desigualdad',
                'verbose_name_plural': 'Reportes de Desigualdad',
                'ordering': ['clave', 'id'],
            },
        ),
    ]
