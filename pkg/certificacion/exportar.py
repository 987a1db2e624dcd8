"""Escritura de resultados: CSV, JSON por líneas, Excel y PDF.

Los CSV usan repr de los flotantes, así que cada fila se relee sin pérdida, y
terminan las líneas en '\\n' para que dos ejecuciones iguales den los mismos bytes.
"""
import csv
import json
import logging
from datetime import datetime
from pathlib import Path

import openpyxl
from django.template.loader import render_to_string
from openpyxl.styles import Alignment, Font, PatternFill

from .certify import COLUMNS

logger = logging.getLogger(__name__)


def _escribir(ruta, cabecera, filas):
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    with ruta.open('w', newline='', encoding='utf-8') as fh:
        escritor = csv.writer(fh, lineterminator='\n')
        escritor.writerow(cabecera)
        escritor.writerows(filas)
    logger.debug('escrito %s (%d filas)', ruta, len(filas))
    return ruta


# ============================================================
# CSV
# ============================================================

def escribir_reportes(ruta, filas):
    """filas: diccionarios con las claves de COLUMNS (InequalityReport.row)."""
    return _escribir(ruta, COLUMNS, [[fila[c] for c in COLUMNS] for fila in filas])


def leer_reportes(ruta):
    with Path(ruta).open(newline='', encoding='utf-8') as fh:
        return list(csv.DictReader(fh))


def escribir_detalle(ruta, registros):
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    with ruta.open('w', encoding='utf-8') as fh:
        for registro in registros:
            fh.write(json.dumps(registro, sort_keys=True, ensure_ascii=False) + '\n')
    return ruta


def escribir_medida(ruta, mu):
    cabecera = [f'x{k + 1}' for k in range(mu.dim)] + ['weight']
    filas = [[*map(float, x), float(w)] for x, w in zip(mu.points, mu.weights)]
    return _escribir(ruta, cabecera, filas)


def escribir_plan(ruta, plan):
    return _escribir(ruta, ['i', 'j', 'weight'], plan.triples())


def escribir_geodesica(ruta, muestras):
    """Serie temporal (t, coordenadas..., peso) de las muestras de una geodésica."""
    dim = muestras[0].measure.dim if muestras else 1
    cabecera = ['t'] + [f'x{k + 1}' for k in range(dim)] + ['weight']
    filas = [
        [m.t, *map(float, x), float(w)]
        for m in muestras
        for x, w in zip(m.measure.points, m.measure.weights)
    ]
    return _escribir(ruta, cabecera, filas)


def escribir_convexidad(ruta, filas):
    """filas: (q, t, ||f_t||_q, cota convexa)."""
    return _escribir(ruta, ['q', 't', 'norm', 'convex_bound'], filas)


def escribir_autovalores(ruta, resultados):
    filas = [
        [r.resolution, r.p, r.eigenvalue, r.constraint_residual, r.iterations]
        for r in resultados
    ]
    return _escribir(ruta, ['resolution', 'p', 'eigenvalue', 'residual', 'iterations'], filas)


def escribir_escalamiento(ruta, reportes):
    filas = [[rep.p, rep.q, n, vol, razon] for rep in reportes for n, vol, razon in rep.rows]
    return _escribir(ruta, ['p', 'q', 'n', 'volume', 'ratio'], filas)


# ============================================================
# 🚀 EXPORTAR EXCEL Y PDF
# ============================================================

def exportar_excel(ruta, filas, titulo='Reportes'):
    wb = openpyxl.Workbook()
    ws = wb.active
    ws.title = titulo

    header_font = Font(bold=True, color="FFFFFF")
    header_fill = PatternFill(start_color="3B82F6", end_color="3B82F6", fill_type="solid")
    center_alignment = Alignment(horizontal="center", vertical="center")
    violada_font = Font(bold=True, color="DC2626")

    ws.append(list(COLUMNS) + ['estado'])
    for cell in ws[1]:
        cell.font = header_font
        cell.fill = header_fill
        cell.alignment = center_alignment

    for fila in filas:
        aprobada = fila['slack'] >= -fila['error_bar']
        ws.append([fila[c] for c in COLUMNS] + ['ok' if aprobada else 'VIOLADA'])
        if not aprobada:
            for cell in ws[ws.max_row]:
                cell.font = violada_font

    for column in ws.columns:
        column = [cell for cell in column]
        max_length = max(len(str(cell.value)) if cell.value is not None else 0 for cell in column)
        ws.column_dimensions[column[0].column_letter].width = min(max_length + 2, 40)

    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    wb.save(ruta)
    return ruta


def exportar_pdf(ruta, experiment_id, filas):
    # Se importa solo al pedir el PDF
    from weasyprint import HTML

    html_string = render_to_string('certificacion/reporte_pdf.html', {
        'experiment_id': experiment_id,
        'filas': [dict(f, violada=f['slack'] < -f['error_bar']) for f in filas],
        'fecha': datetime.now(),
        'violadas': sum(1 for f in filas if f['slack'] < -f['error_bar']),
    })
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    HTML(string=html_string).write_pdf(ruta)
    return ruta
