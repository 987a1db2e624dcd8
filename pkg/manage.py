#!/usr/bin/env python
"""Punto de entrada del proyecto.

    python manage.py desigualdades certify --config experimento.json
    python manage.py test certificacion
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "No se pudo importar Django. ¿Está instalado (pip install -r requirements.txt) "
            "y activo el entorno virtual?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
