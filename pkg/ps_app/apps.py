from django.apps import AppConfig

class PsAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'ps_app'
    verbose_name = 'Seguridad psicológica en pull requests'
