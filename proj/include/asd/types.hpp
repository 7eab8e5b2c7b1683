/*
 * Copyright 2026 The asdfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Core>

namespace asd {

using Index = Eigen::Index;

template <class Scalar_>
using Mat = Eigen::Matrix<Scalar_, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar_>
using Vec = Eigen::Matrix<Scalar_, Eigen::Dynamic, 1>;

template <class Scalar_>
using Arr = Eigen::Array<Scalar_, Eigen::Dynamic, 1>;

using MatX = Mat<double>;
using VecX = Vec<double>;
using ArrX = Arr<double>;

template <class Scalar_>
using MatMap = Eigen::Map<Mat<Scalar_>>;

template <class Scalar_>
using ConstMatMap = Eigen::Map<const Mat<Scalar_>>;

template <class Scalar_>
using VecMap = Eigen::Map<Vec<Scalar_>>;

template <class Scalar_>
using ConstVecMap = Eigen::Map<const Vec<Scalar_>>;

}  // namespace asd
