#pragma once

#include <stdexcept>
#include <string>

namespace geolp {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Metric that fails positive-definiteness; `node` is the flat node index.
class InvalidMetric : public Error
{
public:
    InvalidMetric(const std::string& what, long node, int slice = -1)
        : Error(what)
        , node(node)
        , slice(slice)
    {}
    long node;
    int slice;
};

class RankError : public Error
{
public:
    using Error::Error;
};

class BudgetError : public Error
{
public:
    using Error::Error;
};

class DomainError : public Error
{
public:
    using Error::Error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

/// An inequality whose right side vanishes while the left side does not.
class InequalityViolation : public Error
{
public:
    using Error::Error;
};

} // namespace geolp
