#pragma once

#include "hsa/design_space.hpp"
#include "hsa/error.hpp"
#include "hsa/fitting.hpp"
#include "hsa/io.hpp"
#include "hsa/least_squares.hpp"
#include "hsa/motor_select.hpp"
#include "hsa/relaxation.hpp"
#include "hsa/spring_model.hpp"
#include "hsa/synthetic.hpp"
