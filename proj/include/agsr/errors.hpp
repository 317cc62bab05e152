#ifndef AGSR_ERRORS_HPP
#define AGSR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace agsr {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidGraph : public Error { public: using Error::Error; };
class NotSymmetric : public Error { public: using Error::Error; };
class EigenFailure : public Error { public: using Error::Error; };
class InvalidTarget : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };
class NotScalar : public Error { public: using Error::Error; };
class NumericalError : public Error { public: using Error::Error; };
class DegenerateProjection : public Error { public: using Error::Error; };
class IndexError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class BadMagic : public Error { public: using Error::Error; };
class VersionMismatch : public Error { public: using Error::Error; };
class TruncatedFile : public Error { public: using Error::Error; };
class MissingFile : public Error { public: using Error::Error; };
class MalformedMatrix : public Error { public: using Error::Error; };
class AsymmetricGraph : public Error { public: using Error::Error; };
class DatasetTooSmall : public Error { public: using Error::Error; };
class InsufficientSamples : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

} // namespace agsr

#endif // AGSR_ERRORS_HPP
