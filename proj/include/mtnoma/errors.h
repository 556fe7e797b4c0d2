/*
 * Copyright 2026 The mtnoma Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MTNOMA_ERRORS_H
#define MTNOMA_ERRORS_H

#include <stdexcept>
#include <string>

namespace mtnoma
{

/// A scalar argument outside its documented domain.
class InvalidParameter : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Structurally inconsistent input (e.g. a power list that does not cover
/// every occupant, or a power map built for a different grid).
class InvalidInput : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Exact enumeration would exceed the configured budget.
class TooLarge : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Configuration validation failure. key() names the offending field using
/// dotted paths ("grid.N", "semi_gf.violation_prob").
class ConfigError : public std::runtime_error
{
  public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what),
          m_key(std::move(key))
    {
    }

    const std::string& key() const noexcept
    {
        return m_key;
    }

  private:
    std::string m_key;
};

class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

} // namespace mtnoma

#endif // MTNOMA_ERRORS_H
