// Generated by gen_vectors.py. Do not edit by hand.
#pragma once

namespace oracle {
inline constexpr double conv_x[] = {-0.250919762305275, 0.9014286128198323, 0.4639878836228102, 0.1973169683940732, -0.687962719115127, -0.6880109593275947, -0.8838327756636011, 0.7323522915498704, 0.2022300234864176, 0.416145155592091, -0.9588310114083951, 0.9398197043239886, 0.6648852816008435, -0.5753217786434477, -0.6363500655857988, -0.6331909802931324, -0.39151551408092455, 0.04951286326447568, -0.13610996271576847, -0.4175417196039162, 0.22370578944475894, -0.7210122786959163, -0.4157107029295637, -0.2672763134126166, -0.08786003156592814, 0.5703519227860272, -0.6006524356832805, 0.02846887682722321, 0.18482913772408494, -0.9070991745600046, 0.21508970380287673, -0.6589517526254169, -0.869896814029441, 0.8977710745066665, 0.9312640661491187, 0.6167946962329223, -0.39077246165325863, -0.8046557719872323, 0.3684660530243138, -0.1196950125207974};
inline constexpr double conv_w[] = {-0.7559235303104423, -0.00964617977745963, -0.9312229577695632, 0.8186408041575641, -0.48244003679996617, 0.32504456870796394, -0.3765778478211781, 0.040136042355621626, 0.0934205586865593, -0.6302910889489459, 0.9391692555291171, 0.5502656467222291, 0.8789978831283782, 0.7896547008552977, 0.19579995762217028, 0.8437484700462337, -0.823014995896161, -0.6080342751617096, -0.9095454221789239, -0.3493393384734713, -0.22264542062103598, -0.4573019364522082, 0.6574750183038587, -0.28649334661282144, -0.4381309806252385, 0.08539216631649693, -0.7181515500504747, 0.6043939615080793, -0.8508987126404584, 0.9737738732010346, 0.5444895385933148, -0.6025686369316552, -0.9889557657527952, 0.6309228569096683, 0.41371468769523423, 0.4580143360819746, 0.5425406933718915, -0.8519106965318193, -0.2830685429114548, -0.7682618809497406, 0.726206851751187, 0.24659625365511584, -0.3382039502947016, -0.8728832994279527, -0.3780353565686756, -0.3496333559465059, 0.45921235667612814, 0.27511494271042625, 0.7744254851526531, -0.05557014967610141, -0.7608115081233966, 0.42648957444599, 0.5215700972337949, 0.12255439513899247};
inline constexpr double conv_b[] = {0.541934359909122, -0.012408807271218514, 0.045465658763988115};
inline constexpr double conv_y_s1p1[] = {0.7770956228454315, 0.8486451024900994, -0.1556921147516631, 0.20395019188689462, 1.5741050386568725, 0.16864341391391569, 1.091394253883387, -2.6580758756701566, -0.9488203670457358, 0.07847997218190084, 2.053623015954712, -0.4845636229509518, 0.9381352617065244, -0.9755113211611302, 1.2210696712513998, 0.10416714439446206, -0.8319404808774715, -0.8421766769104007, 2.0720676333723156, 1.611106273095214, 0.6794462475985062, 1.353874053680237, -0.031861472837859894, -0.7996606544643697, -0.9592830237233138, -1.9363340176693253, -0.20292108631942496, -1.3861462084683756, 0.3861490700867059, 1.9394554918877658, -0.7197857036341613, 3.9503384175604745, -0.4041183684816231, -4.444306013914409, 0.5211582630909933, -1.000732643694385, 1.6119963591273532, 0.4030393523061767, -1.1916091987174111, 0.5438410864787361, 1.7801972285208842, 2.197638387278489, -1.2288453712628011, -1.1617452857625452, -1.6337611341165104, 0.12921805900789576, -2.098878410088793, -0.5810320694443555, 1.440294014659665, 2.7507340578653343, 1.9777902042255011, 2.696339705556249, -2.7678616697380924, -2.4452808296467827, 0.44808962739337055, 0.22040996027265242, -0.7547995654921594, -0.005360614688594431, 1.2566602528745419, 0.48254827247133236};
inline constexpr double conv_y_s2p0[] = {1.091394253883387, -0.9488203670457358, -0.20292108631942496, 0.3861490700867059, -2.098878410088793, 1.440294014659665};
inline constexpr double deform_off_bias[] = {-0.08695077796974049, -0.5694970479070858, -0.4705302876080346, -0.5622849771759189, 0.16369249351653647, -0.22277282270840798, 0.010284829397643303, 0.48907976871131165, -0.30084932502135003, -0.10754049235724433, 0.3066613662516584, -0.32544220141005303, -0.5076241082054483, -0.25229825650347837, -0.4065344552951947, 0.5156371828110876, 0.3697444554773003, 0.16008450781250816};
inline constexpr double deform_y[] = {0.9791752221530861, 0.8036999774819494, -0.25370447298490173, 0.17028821613371775, 0.3432639524424434, 0.8054288392522935, 0.27611428284809725, -1.5472378337326544, -0.4462078297050498, 0.07354108738427018, 1.5519593972015864, 0.5638895876060068, -0.5829265282421245, -0.2717212507182456, 0.7006930450924502, 0.6598378987731386, -0.4650637577491785, -0.5580638142218626, 1.1632190659171686, 1.3440617095541985, -0.1661872074852857, 0.20634533136077715, -0.1765039609856324, -0.4278076074804375, -0.3891992444795776, -1.156048094570309, 0.08684591700439248, 0.13994617291121758, -0.7381182441155346, -0.004022287304174796, -0.49358329055974715, 1.2323248238330289, 0.86217159745763, -1.972576296075599, 0.06799977101649882, -0.770028407847164, 0.802445642708417, 1.3313632603083003, -0.9713303394271237, -0.42126656473772345, 0.5249649128407519, 0.017368576845238175, -0.9125629714682206, -0.7103241124604297, -0.42082428365106467, -0.0032182260473600025, -0.2852804221624768, -0.2162083301021513, 0.6341748320118789, 0.34216146451734664, 0.7498163237606474, 0.3624457703389127, -1.750499876741876, -1.1228262329104381, 1.2456117031354694, 0.3383849452528539, 0.6428393071251327, -0.47576348083740483, 0.39557549146061083, 0.6101119221278472};
inline constexpr double se_x[] = {0.7429211803754354, 0.6073441537982289, -0.6268598822279283, 0.7851179969799555, 0.07868448383130144, 0.6148803103281251, 0.7921825998469865, -0.36399305005627225, -0.7798961509446465, -0.5441296749161166, -0.14578442274748737, 0.6360295318449862, 0.7214611665126869, -0.9860957389376186, 0.021494605155131463, -0.16517799370244202, -0.5557843790585395, -0.7602692653326344, -0.3247696571927441, 0.8858194078250383, -0.35359413595848954, 0.037581243486732197, 0.4060379177903557, -0.27274079524141204};
inline constexpr double se_fc1_w[] = {0.9435641654419213, 0.9248945898842225, -0.4964354083492717, -0.005502988215229099, -0.3982433803664607, -0.4303190112450648};
inline constexpr double se_fc1_b[] = {-0.4631130526454672, 0.10956433397989684};
inline constexpr double se_fc2_w[] = {0.005358046457722976, -0.8970424975000213, -0.44270707152677713, 0.8165317719333074, -0.5208762186660552, -0.7102102558175538};
inline constexpr double se_fc2_b[] = {-0.010547239722436985, 0.4856504541106007, -0.2579447284884996};
inline constexpr double se_s[] = {0.47854353808827843, 0.6088107130828726, 0.3889325827411054, 0.45155312944332465, 0.657686141919485, 0.4004709193607847};
inline constexpr double se_y[] = {0.35552013017758094, 0.290640620195836, -0.29997974592695437, 0.37571314409157025, 0.04790395670989239, 0.3743457201914838, 0.48228925350468776, -0.22160286836196885, -0.30332702425674835, -0.21162975981120333, -0.05670031206260143, 0.24737260852008666, 0.3257780475106353, -0.44527461684800934, 0.009705956223948231, -0.07458663997150747, -0.3655316840021275, -0.5000185599365816, -0.21359650285160958, 0.5825911487698524, -0.14160416870787862, 0.015050195129853144, 0.16260637823284246, -0.10922475701751981};
inline constexpr double up_x[] = {0.3442710948117571, 0.5232392306574352, -0.5247249120152007, 0.45643269722371915, -0.26443373456149355, 0.26461166118715895, 0.2670594215217894, 0.07154936814951696, -0.8194204598911834, 0.6706049911784759, -0.35843987005652833, -0.6269629792002915, -0.9184497168904722, 0.18178588637648363, 0.35512872368456483, -0.9668243421442877, 0.024186116598561958, -0.5470084496041241, 0.2903455808188997, -0.6512671419900171, 0.3818754762049319, -0.22652930739892518, 0.873459977473469, -0.7249581117080135};
inline constexpr double up_y[] = {0.3442710948117571, 0.3890131287731766, 0.47849719669601565, 0.2612481949892762, -0.2627338763470417, -0.2794355097054707, 0.2111432949139892, 0.45643269722371915, 0.19209488746844444, 0.25871675017379986, 0.39196047558451064, 0.2622420465596613, -0.1304385369007483, -0.15503115523442268, 0.18846419155863814, 0.3602118649551686, -0.11225752721818089, -0.0018760070249536631, 0.21888703336150078, 0.26422974970043145, 0.13415214199183842, 0.0937775537076733, 0.1431059848479361, 0.1677702004180675, -0.403180415893916, -0.21085781349918992, 0.17378739129026213, 0.30225364492054363, 0.17454094739165457, 0.05724376929842369, -0.04963788935914888, -0.10307871868793517, -0.6806737785587609, -0.36822866924890907, 0.2566615493707948, 0.37631373221999775, -0.009272120701299985, -0.2646325084621715, -0.3897674310626168, -0.4523348923628394, -0.8194204598911834, -0.44691409712376856, 0.2980986284110611, 0.4133437758697248, -0.10117865474777726, -0.4255706473424691, -0.5598322019143507, -0.6269629792002915, -0.9184497168904722, -0.6433908160737332, -0.09327301444025532, 0.22512159570350393, 0.31179301435754453, 0.024640457227351698, -0.6363360756870745, -0.9668243421442877, -0.6827907585182136, -0.5121962432933274, -0.17100721284355463, 0.0844237112780359, 0.25409652907144437, 0.032215942949681414, -0.5812180470872529, -0.8879350421057199, -0.21147284177369657, -0.24980709773251544, -0.32647560965015326, -0.19697205757290015, 0.13870355849924396, 0.047366914394340806, -0.47098198988760953, -0.7301564420285848, 0.11360845650015444, -0.03151582363809026, -0.32176438391457973, -0.24113545304398276, 0.21037096897370045, 0.1596706638820275, -0.39323636831900166, -0.6696898844195163, 0.2924531363033394, 0.14267757898994832, -0.15687353563683382, -0.04806647513521202, 0.4690987604948138, 0.3691271914127415, -0.3479811823814291, -0.7065353692785143, 0.3818754762049319, 0.22977428030396763, -0.07442811149796091, 0.048468013819173386, 0.5984626562553704, 0.4738554551780984, -0.32535358941264286, -0.7249581117080135};
inline constexpr double loss_p[] = {0.3569597159452326, 0.15212616911653015, 0.8822242564507065, 0.8396054180428829, 0.28214746494364, 0.6439856414307611, 0.7854999801810942, 0.549680730439516, 0.5266855205204058};
inline constexpr double loss_y[] = {1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0};
inline constexpr double loss_bce_sum[] = {6.679256009706702};
inline constexpr double loss_bce_mean[] = {0.7421395566340779};
inline constexpr double loss_bce_grad_sum[] = {-2.801436563652542, 1.179420762353306, -1.1334986458240441, -1.1910356680772691, -3.5442459148082497, 2.808875473502894, 4.662004231254906, -1.819237867771744, 2.1127602119831463};
inline constexpr double loss_focal_sum_a25_g2[] = {1.493505212549616};
inline constexpr double loss_focal_grad_sum_a25_g2[] = {-0.6208073674682979, 0.05812752021948076, -0.01130990567379184, -0.021680621612325576, -0.9107568749280726, 1.871314682642344, 3.9712297419033136, -0.22696915119279004, 1.0304934199341775};
inline constexpr double loss_dice_absdiff_eps1[] = {0.46882834940887375};
inline constexpr double loss_dice_focal_g2_eps1[] = {0.3648567235603367};
inline constexpr double adam_theta0[] = {1.0, -2.0, 0.5, 3.0};
inline constexpr double adam_g[] = {0.5, -1.0, 2.0, 0.25};
inline constexpr double adam_after1[] = {0.99900000002, -1.9990000000099999, 0.499000000005, 2.99900000004};
inline constexpr double adam_after3[] = {0.99700000006, -1.99700000003, 0.497000000015, 2.9970000001200003};
}  // namespace oracle
