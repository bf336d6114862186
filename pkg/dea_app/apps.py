from django.apps import AppConfig


class DeaAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'dea_app'
    verbose_name = 'Dynamic enhancement anchor engine'
