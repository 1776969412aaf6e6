from django.urls import path

from . import views

urlpatterns = [
    path('compile/', views.api_compile, name='api_compile'),
    path('simulate/', views.api_simulate, name='api_simulate'),
]
