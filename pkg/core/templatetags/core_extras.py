from django import template

register = template.Library()


@register.filter(name='coord')
def coord(value):
    """Fixed two-decimal SVG coordinate without trailing zeros."""
    text = f"{float(value):.2f}".rstrip('0').rstrip('.')
    return '0' if text in ('-0', '') else text


@register.filter(name='points')
def points(pairs):
    # polyline "x,y x,y ..."
    return ' '.join(f"{coord(x)},{coord(y)}" for x, y in pairs)


@register.filter(name='tick')
def tick(value):
    """Axis label: integers plain, other values with up to two decimals."""
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return coord(value)
