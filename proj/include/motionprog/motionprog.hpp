#pragma once

#include "motionprog/abstractor.hpp"
#include "motionprog/errors.hpp"
#include "motionprog/geometry.hpp"
#include "motionprog/motion_apps.hpp"
#include "motionprog/pose.hpp"
#include "motionprog/pose_io.hpp"
#include "motionprog/primitive.hpp"
#include "motionprog/primitive_fit.hpp"
#include "motionprog/segmenter.hpp"
#include "motionprog/synthetic.hpp"
