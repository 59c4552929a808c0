import numpy as np


class Vec3:
    """An immutable position or direction in metres."""

    __slots__ = ("_x", "_y", "_z")

    def __init__(self, x: float = 0.0, y: float = 0.0, z: float = 0.0):
        for value in (x, y, z):
            if not isinstance(value, (int, float, np.floating, np.integer)):
                raise TypeError("need float or int")
        self._x = float(x)
        self._y = float(y)
        self._z = float(z)

    @property
    def x(self) -> float:
        return self._x

    @property
    def y(self) -> float:
        return self._y

    @property
    def z(self) -> float:
        return self._z

    @classmethod
    def from_array(cls, values) -> "Vec3":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def to_array(self) -> np.ndarray:
        return np.array([self._x, self._y, self._z])

    def __str__(self):
        return f"[{self._x},{self._y},{self._z}]"

    def __repr__(self):
        return f"Vec3({self._x}, {self._y}, {self._z})"

    def __iter__(self):
        return iter((self._x, self._y, self._z))

    def __add__(self, other):
        if isinstance(other, Vec3):
            return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)
        raise TypeError("Operand must be of type Vec3")

    def __sub__(self, other):
        if isinstance(other, Vec3):
            return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)
        raise TypeError("Operand must be of type Vec3")

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, np.floating, np.integer)):
            return Vec3(self.x * scalar, self.y * scalar, self.z * scalar)
        raise TypeError("Operand must be a number")

    def __rmul__(self, scalar):
        return self.__mul__(scalar)

    def __eq__(self, other) -> bool:
        if isinstance(other, Vec3):
            return self.x == other.x and self.y == other.y and self.z == other.z
        return False

    def __hash__(self):
        return hash((self._x, self._y, self._z))

    def isclose(self, other: "Vec3", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_array(), other.to_array(), rtol=0.0, atol=atol))
