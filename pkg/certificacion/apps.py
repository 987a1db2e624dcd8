from django.apps import AppConfig


class CertificacionConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'certificacion'
    verbose_name = 'Certificación de desigualdades de Poincaré-Wirtinger'
