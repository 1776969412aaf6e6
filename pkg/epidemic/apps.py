from django.apps import AppConfig


class EpidemicConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'epidemic'
    verbose_name = 'Network epidemic models'
